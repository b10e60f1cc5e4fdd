// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "xvgs/camera.hpp"
#include "xvgs/image.hpp"

namespace xvgs {

enum class Split { kTrain, kTest };

/// One registered photograph: camera pose plus its ground-truth image.
struct View {
  std::string name;
  Camera camera;
  ImageBuffer image;
  Split split = Split::kTrain;
};

/// All views captured from one vantage class (e.g. one orbit of cameras).
/// Views keep their manifest order; the split tag marks held-out test views.
struct ViewGroup {
  int group_id = 0;
  std::vector<View> views;

  size_t count(Split s) const {
    size_t n = 0;
    for (const View& v : views) n += (v.split == s) ? 1 : 0;
    return n;
  }
};

}  // namespace xvgs
