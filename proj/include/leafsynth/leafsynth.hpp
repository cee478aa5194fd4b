#pragma once

#include "leafsynth/error.hpp"
#include "leafsynth/geometry.hpp"
#include "leafsynth/rng.hpp"
#include "leafsynth/image.hpp"
#include "leafsynth/png_io.hpp"
#include "leafsynth/noise.hpp"
#include "leafsynth/paper_texture.hpp"
#include "leafsynth/leaf_shape.hpp"
#include "leafsynth/venation.hpp"
#include "leafsynth/leaf_texture.hpp"
#include "leafsynth/scene_render.hpp"
#include "leafsynth/annotate.hpp"
#include "leafsynth/edges.hpp"
#include "leafsynth/inpaint_client.hpp"
#include "leafsynth/inpaint_http.hpp"
#include "leafsynth/filter_metrics.hpp"
#include "leafsynth/config.hpp"
#include "leafsynth/dataset.hpp"
