#pragma once

#include <array>
#include <utility>

namespace fracopt::detail {

// Gauss-Legendre nodes/weights on [-1, 1].

inline constexpr std::array<double, 2> kGx2 = {-0.5773502691896257645091488, 0.5773502691896257645091488};
inline constexpr std::array<double, 2> kGw2 = {1.0, 1.0};

inline constexpr std::array<double, 4> kGx4 = {
    -0.8611363115940525752239465, -0.3399810435848562648026658,
    0.3399810435848562648026658, 0.8611363115940525752239465};
inline constexpr std::array<double, 4> kGw4 = {
    0.3478548451374538573730639, 0.6521451548625461426269361,
    0.6521451548625461426269361, 0.3478548451374538573730639};

inline constexpr std::array<double, 6> kGx6 = {
    -0.9324695142031520278123016, -0.6612093864662645136613996, -0.2386191860831969086305017,
    0.2386191860831969086305017, 0.6612093864662645136613996, 0.9324695142031520278123016};
inline constexpr std::array<double, 6> kGw6 = {
    0.1713244923791703450402961, 0.3607615730481386075698335, 0.4679139345726910473898703,
    0.4679139345726910473898703, 0.3607615730481386075698335, 0.1713244923791703450402961};

inline constexpr std::array<double, 16> kGx16 = {
    -0.9894009349916499325961542, -0.9445750230732325760779884, -0.8656312023878317438804679,
    -0.7554044083550030338951012, -0.6178762444026437484466718, -0.4580167776572273863424194,
    -0.2816035507792589132304605, -0.0950125098376374401853193, 0.0950125098376374401853193,
    0.2816035507792589132304605,  0.4580167776572273863424194,  0.6178762444026437484466718,
    0.7554044083550030338951012,  0.8656312023878317438804679,  0.9445750230732325760779884,
    0.9894009349916499325961542};
inline constexpr std::array<double, 16> kGw16 = {
    0.0271524594117540948517806, 0.0622535239386478928628438, 0.0951585116824927848099251,
    0.1246289712555338720524763, 0.1495959888165767320815017, 0.1691565193950025381893121,
    0.1826034150449235888667637, 0.1894506104550684962853967, 0.1894506104550684962853967,
    0.1826034150449235888667637, 0.1691565193950025381893121, 0.1495959888165767320815017,
    0.1246289712555338720524763, 0.0951585116824927848099251, 0.0622535239386478928628438,
    0.0271524594117540948517806};

/// Integrate f over [x0, x1] with an n-point rule.
template <std::size_t N, typename F>
double gauss(const std::array<double, N>& gx, const std::array<double, N>& gw, F&& f, double x0,
             double x1) {
  const double xm = 0.5 * (x0 + x1), xr = 0.5 * (x1 - x0);
  double acc = 0.0;
  for (std::size_t i = 0; i < N; ++i) acc += gw[i] * f(xm + xr * gx[i]);
  return xr * acc;
}

template <typename F>
double gauss2(F&& f, double x0, double x1) { return gauss(kGx2, kGw2, std::forward<F>(f), x0, x1); }
template <typename F>
double gauss4(F&& f, double x0, double x1) { return gauss(kGx4, kGw4, std::forward<F>(f), x0, x1); }
template <typename F>
double gauss6(F&& f, double x0, double x1) { return gauss(kGx6, kGw6, std::forward<F>(f), x0, x1); }
template <typename F>
double gauss16(F&& f, double x0, double x1) { return gauss(kGx16, kGw16, std::forward<F>(f), x0, x1); }

}  // namespace fracopt::detail
