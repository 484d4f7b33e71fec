#pragma once

#include "wuiq/error.hpp"
#include "wuiq/ahp.hpp"
#include "wuiq/usability.hpp"
#include "wuiq/metrics.hpp"
#include "wuiq/quality.hpp"
#include "wuiq/segmentation.hpp"
#include "wuiq/explain.hpp"
#include "wuiq/batch.hpp"
#include "wuiq/export.hpp"
#include "wuiq/store.hpp"
#include "wuiq/pipeline.hpp"
