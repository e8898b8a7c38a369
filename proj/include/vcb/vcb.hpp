#pragma once

#include "vcb/analysis.hpp"
#include "vcb/concept_bank.hpp"
#include "vcb/embeddings.hpp"
#include "vcb/evaluate.hpp"
#include "vcb/feature_table.hpp"
#include "vcb/io.hpp"
#include "vcb/kmeans.hpp"
#include "vcb/linalg.hpp"
#include "vcb/parallel.hpp"
#include "vcb/pca.hpp"
#include "vcb/random.hpp"
#include "vcb/run_config.hpp"
#include "vcb/svm.hpp"
#include "vcb/synth.hpp"
#include "vcb/target.hpp"
#include "vcb/text_norm.hpp"
