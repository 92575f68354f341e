#include "mfg/ode.hpp"

#include <cmath>

#include "mfg/errors.hpp"

namespace mfg {

namespace {

double norm1(const Matrix& a) {
    double best = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < a.rows(); ++i) s += std::abs(a(i, j));
        best = std::max(best, s);
    }
    return best;
}

}  // namespace

Matrix expm(const Matrix& a) {
    if (a.rows() != a.cols()) throw DimensionError("expm of non-square matrix");
    const std::size_t n = a.rows();
    const Matrix eye = Matrix::identity(n);

    // scale so the Pade-13 approximant is in its accuracy region
    const double theta13 = 5.371920351148152;
    const double nrm = norm1(a);
    int squarings = 0;
    if (nrm > theta13) squarings = static_cast<int>(std::ceil(std::log2(nrm / theta13)));
    Matrix x = a * std::pow(2.0, -squarings);

    static const double b[] = {64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
                               1187353796428800.0,  129060195264000.0,   10559470521600.0,
                               670442572800.0,      33522128640.0,       1323241920.0,
                               40840800.0,          960960.0,            16380.0,
                               182.0,               1.0};

    const Matrix x2 = x * x;
    const Matrix x4 = x2 * x2;
    const Matrix x6 = x4 * x2;
    const Matrix u = x * (x6 * (b[13] * x6 + b[11] * x4 + b[9] * x2) + b[7] * x6 + b[5] * x4 +
                          b[3] * x2 + b[1] * eye);
    const Matrix v = x6 * (b[12] * x6 + b[10] * x4 + b[8] * x2) + b[6] * x6 + b[4] * x4 + b[2] * x2 +
                     b[0] * eye;

    Matrix e = solve_lu(v - u, v + u);
    for (int i = 0; i < squarings; ++i) e = e * e;
    return e;
}

Path integrate_linear_ode(const Matrix& f, const std::function<Vector(double)>& g, const Vector& x0,
                          const TimeGrid& grid) {
    const std::size_t n = x0.size();
    if (f.rows() != n || f.cols() != n) throw DimensionError("integrate_linear_ode: shape mismatch");
    Path out(n, grid.count);
    Vector x = x0;
    auto rhs = [&](double t, const Vector& state) {
        Vector dx = f * state;
        if (g) {
            const Vector gv = g(t);
            for (std::size_t i = 0; i < n; ++i) dx[i] += gv[i];
        }
        return dx;
    };
    const double h = grid.dt;
    for (std::size_t k = 0; k < grid.count; ++k) {
        for (std::size_t i = 0; i < n; ++i) out.frame(k)[i] = x[i];
        if (k + 1 == grid.count) break;
        const double t = grid.time(k);
        const Vector k1 = rhs(t, x);
        Vector tmp(n);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * h * k1[i];
        const Vector k2 = rhs(t + 0.5 * h, tmp);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * h * k2[i];
        const Vector k3 = rhs(t + 0.5 * h, tmp);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + h * k3[i];
        const Vector k4 = rhs(t + h, tmp);
        for (std::size_t i = 0; i < n; ++i) x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    return out;
}

}  // namespace mfg
