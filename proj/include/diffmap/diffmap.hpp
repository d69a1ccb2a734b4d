#pragma once

#include "diffmap/config.hpp"
#include "diffmap/csv.hpp"
#include "diffmap/distance.hpp"
#include "diffmap/embedding.hpp"
#include "diffmap/errors.hpp"
#include "diffmap/evaluation.hpp"
#include "diffmap/feature_matrix.hpp"
#include "diffmap/geojson.hpp"
#include "diffmap/hierarchy.hpp"
#include "diffmap/laplacian.hpp"
#include "diffmap/pipeline.hpp"
#include "diffmap/similarity_graph.hpp"
#include "diffmap/synthetic.hpp"
