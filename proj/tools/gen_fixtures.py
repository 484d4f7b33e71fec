#!/usr/bin/env python3
"""Regenerates the synthetic fixture files under data/fixtures/.

The survey respondents are invented: a group of recent users with middling
scores and mixed reviews, and a group of long-time users with high scores.
"""
import csv
import json
import random
from pathlib import Path

OUT = Path(__file__).resolve().parent.parent / "data" / "fixtures"

NEW_REVIEWS = [
    "The menu is confusing and the search is slow.",
    "Hard to find the timetable, pages load slow.",
    "Looks nice but the forms are confusing.",
    "Too cluttered on mobile, links are unclear.",
    "Some pages are slow and the layout is messy.",
    "Useful content, but navigation is difficult.",
    "Registration was frustrating and buggy.",
    "It is okay, the colors are pleasant.",
]
OLD_REVIEWS = [
    "Great portal, easy to use and fast.",
    "Clean layout and very helpful information.",
    "I like the simple navigation, it is quick.",
    "Reliable and convenient for checking grades.",
    "Smooth experience, the design is attractive.",
    "Easy to find everything, really useful.",
    "Friendly interface and clear menus.",
    "Good site, but the library page is slow.",
]


def likert(rng, centre):
    return max(1, min(5, round(rng.gauss(centre, 0.6))))


def respondent(rng, rid, group):
    if group == "new":
        odd, even, ext = 3.0, 2.8, 3.1
        duration = rng.randint(1, 4)
        review = rng.choice(NEW_REVIEWS)
    else:
        odd, even, ext = 4.3, 1.8, 4.2
        duration = rng.randint(9, 14)
        review = rng.choice(OLD_REVIEWS)
    uq = []
    for item in range(1, 18):
        if item <= 10:
            uq.append(likert(rng, odd if item % 2 else even))
        else:
            uq.append(likert(rng, ext))
    return {
        "respondent_id": rid,
        "uq": uq,
        "review_text": review,
        "duration_months": duration,
        "submitted_at": "2024-03-%02dT10:00:00Z" % (1 + int(rid[1:]) % 28),
    }


def main():
    rng = random.Random(20240301)
    surveys = []
    for i in range(40):
        group = "new" if i % 2 == 0 else "old"
        surveys.append(respondent(rng, "r%02d" % (i + 1), group))
    (OUT / "surveys.json").write_text(
        json.dumps({"format": "wuiq.surveys.v1", "surveys": surveys}, indent=2) + "\n")
    with open(OUT / "surveys.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["respondent_id"] + ["uq_%d" % i for i in range(1, 18)] +
                   ["review_text", "duration_months", "submitted_at"])
        for s in surveys:
            w.writerow([s["respondent_id"]] + s["uq"] +
                       [s["review_text"], s["duration_months"], s["submitted_at"]])

    # Four respondents: two with 0 months of use and two with 10. Within each
    # pair the item-1 answer differs by one step.
    base = [4, 2, 4, 2, 4, 2, 4, 2, 4, 2, 4, 4, 4, 4, 4, 4, 4]
    four = []
    for rid, dur, bump in [("a", 0, 0), ("b", 0, 1), ("c", 10, 0), ("d", 10, 1)]:
        uq = list(base)
        uq[0] += bump
        four.append({"respondent_id": rid, "uq": uq, "review_text": "ok",
                     "duration_months": dur, "submitted_at": "2024-03-01T00:00:00Z"})
    (OUT / "segment4.json").write_text(
        json.dumps({"format": "wuiq.surveys.v1", "surveys": four}, indent=2) + "\n")


if __name__ == "__main__":
    main()
