// Copyright (c) 2026 fisheyeloc contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

namespace fisheyeloc {

/// Pixel coordinates on the fisheye image plane.
struct ImagePoint {
    double u = 0.0;
    double v = 0.0;
};

/// Camera-centred metric coordinates. z runs down the optical axis toward the
/// floor, so floor points under an overhead camera have z > 0.
struct WorldPoint {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
};

}  // namespace fisheyeloc
