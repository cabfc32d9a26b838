#pragma once

#include "hgml/annotator.hpp"
#include "hgml/comparison.hpp"
#include "hgml/cv.hpp"
#include "hgml/dataset.hpp"
#include "hgml/error.hpp"
#include "hgml/feature_transform.hpp"
#include "hgml/gbdt.hpp"
#include "hgml/linear.hpp"
#include "hgml/matrix.hpp"
#include "hgml/metrics.hpp"
#include "hgml/model_store.hpp"
#include "hgml/pairing.hpp"
#include "hgml/pipeline.hpp"
#include "hgml/polygon_model.hpp"
#include "hgml/random.hpp"
#include "hgml/service.hpp"
#include "hgml/tokens.hpp"
