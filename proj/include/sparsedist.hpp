#pragma once

#include "sparsedist/complexity.hpp"
#include "sparsedist/compression.hpp"
#include "sparsedist/dictionary.hpp"
#include "sparsedist/error.hpp"
#include "sparsedist/eval/hungarian.hpp"
#include "sparsedist/eval/knn.hpp"
#include "sparsedist/eval/linkage.hpp"
#include "sparsedist/eval/manifest.hpp"
#include "sparsedist/eval/retrieval.hpp"
#include "sparsedist/eval/spectral.hpp"
#include "sparsedist/image.hpp"
#include "sparsedist/image_io.hpp"
#include "sparsedist/ksvd.hpp"
#include "sparsedist/omp.hpp"
#include "sparsedist/patches.hpp"
#include "sparsedist/scale_selection.hpp"
