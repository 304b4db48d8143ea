#pragma once

#include <virial/types.hpp>

namespace virial {

inline Vec cross3(const Vec& a, const Vec& b) {
    Vec c(3);
    c << a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0];
    return c;
}

// hat(v) * a = v x a
inline Mat hat3(const Vec& v) {
    Mat m(3, 3);
    m << 0, -v[2], v[1], v[2], 0, -v[0], -v[1], v[0], 0;
    return m;
}

// Structure tensor of so(3) in the basis where [e_a, e_b] = eps_{ab g} e_g:
// slice g holds C^g_{ab} = eps_{ab g}.
inline Tensor3 so3_structure_tensor() {
    Tensor3 c(3, Mat::Zero(3, 3));
    c[0](1, 2) = 1;
    c[0](2, 1) = -1;
    c[1](2, 0) = 1;
    c[1](0, 2) = -1;
    c[2](0, 1) = 1;
    c[2](1, 0) = -1;
    return c;
}

}  // namespace virial
