// Copyright 2026 The pqd Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <ostream>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "pqd/error.hpp"
#include "pqd/random.hpp"
#include "pqd/sweep.hpp"

namespace pqd {

/// Values at or below this are treated as numerically zero in log space.
inline constexpr double kEpsilonFloor = 1e-24;

struct FitWindow {
    double lo = 0.0;
    double hi = 0.0;

    bool contains(double x) const {
        // Grid points are computed through pow(); allow rounding at the edges.
        const double slack = 1e-9;
        return x >= lo * (1.0 - slack) && x <= hi * (1.0 + slack);
    }
};

/// Default windows per decoder: below the higher-order regime and above the
/// numerical floor.
inline FitWindow default_window(std::string_view decoder, bool noisy) {
    if (decoder == "naive") {
        return {std::pow(10.0, -2.5), 0.1};
    }
    if (noisy) {
        return {0.01, std::pow(10.0, -0.7)};
    }
    return {std::pow(10.0, -1.3), std::pow(10.0, -0.5)};
}

struct FitReport {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_stderr = 0.0;
    FitWindow window;
    std::size_t points_used = 0;
};

/// Ordinary least squares of log10 y on log10 x over points inside the
/// window with y above the floor.
inline FitReport fit_power_law(std::span<const double> x, std::span<const double> y, FitWindow window) {
    if (x.size() != y.size()) {
        throw Error(ErrorKind::length_mismatch, "fit needs equally many x and y values");
    }
    std::vector<double> lx;
    std::vector<double> ly;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] > 0.0 && window.contains(x[i]) && std::isfinite(y[i]) && y[i] > kEpsilonFloor) {
            lx.push_back(std::log10(x[i]));
            ly.push_back(std::log10(y[i]));
        }
    }
    const std::size_t k = lx.size();
    if (k < 3) {
        throw Error(ErrorKind::invalid_argument,
                    "fit needs at least 3 points in the window, found " + std::to_string(k));
    }
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= static_cast<double>(k);
    my /= static_cast<double>(k);
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    if (!(sxx > 0.0)) {
        throw Error(ErrorKind::invalid_argument, "fit needs at least two distinct x values");
    }
    FitReport out;
    out.slope = sxy / sxx;
    out.intercept = my - out.slope * mx;
    double ssr = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        double r = ly[i] - (out.intercept + out.slope * lx[i]);
        ssr += r * r;
    }
    out.slope_stderr = k > 2 ? std::sqrt(ssr / static_cast<double>(k - 2) / sxx) : 0.0;
    out.window = window;
    out.points_used = k;
    return out;
}

struct CurvePoint {
    double lambda = 0.0;
    double mean = 0.0;
    /// Spread of the disorder mean (standard error over realizations).
    double spread = 0.0;
    std::size_t count = 0;
};

struct SeriesKey {
    std::string code;
    std::string decoder;
    char basis = 'X';
    auto operator<=>(const SeriesKey &) const = default;
};

/// Distinct (code, decoder, basis) series in first-seen order.
inline std::vector<SeriesKey> series_keys(const SweepResult &result) {
    std::vector<SeriesKey> out;
    std::set<SeriesKey> seen;
    for (const auto &r : result.rows) {
        SeriesKey k{r.code, r.decoder, r.basis};
        if (seen.insert(k).second) {
            out.push_back(k);
        }
    }
    return out;
}

/// Disorder mean per lambda over successful rows of one series. An empty
/// `code` matches any code but rejects mixed input.
inline std::vector<CurvePoint> disorder_mean(const SweepResult &result, std::string_view decoder, char basis,
                                             std::string_view code = {}) {
    std::map<double, std::vector<double>> by_lambda;
    std::string seen_code;
    for (const auto &r : result.rows) {
        if (r.decoder != decoder || r.basis != basis || r.failed()) {
            continue;
        }
        if (!code.empty() && r.code != code) {
            continue;
        }
        if (code.empty()) {
            if (seen_code.empty()) {
                seen_code = r.code;
            } else if (seen_code != r.code) {
                throw Error(ErrorKind::invalid_argument, "rows mix several codes; select one");
            }
        }
        by_lambda[r.lambda].push_back(r.epsilon);
    }
    std::vector<CurvePoint> out;
    for (const auto &[lambda, values] : by_lambda) {
        CurvePoint p;
        p.lambda = lambda;
        p.count = values.size();
        CompensatedSum s;
        for (double v : values) s.add(v);
        p.mean = s.value() / static_cast<double>(p.count);
        if (p.count > 1) {
            double ss = 0.0;
            for (double v : values) ss += (v - p.mean) * (v - p.mean);
            p.spread = std::sqrt(ss / static_cast<double>(p.count - 1) / static_cast<double>(p.count));
        }
        out.push_back(p);
    }
    return out;
}

inline FitReport fit_curve(const std::vector<CurvePoint> &curve, FitWindow window) {
    std::vector<double> x;
    std::vector<double> y;
    for (const auto &p : curve) {
        x.push_back(p.lambda);
        y.push_back(p.mean);
    }
    return fit_power_law(x, y, window);
}

inline FitReport fit_exponent(const SweepResult &result, std::string_view decoder, char basis, FitWindow window,
                              std::string_view code = {}) {
    return fit_curve(disorder_mean(result, decoder, basis, code), window);
}

/// Slopes refit on realizations resampled with replacement.
inline std::vector<double> bootstrap_slopes(const SweepResult &result, std::string_view decoder, char basis,
                                            FitWindow window, std::size_t resamples, std::uint64_t seed,
                                            std::string_view code = {}) {
    std::vector<std::uint64_t> seeds;
    std::map<std::uint64_t, std::vector<const SweepRow *>> by_seed;
    for (const auto &r : result.rows) {
        if (r.decoder != decoder || r.basis != basis || r.failed() || (!code.empty() && r.code != code)) {
            continue;
        }
        auto &v = by_seed[r.seed];
        if (v.empty()) {
            seeds.push_back(r.seed);
        }
        v.push_back(&r);
    }
    if (seeds.empty()) {
        throw Error(ErrorKind::invalid_argument, "no rows for the requested series");
    }
    Rng rng(seed);
    std::vector<double> out;
    out.reserve(resamples);
    for (std::size_t b = 0; b < resamples; ++b) {
        SweepResult sample;
        for (std::size_t i = 0; i < seeds.size(); ++i) {
            for (const SweepRow *r : by_seed[seeds[rng.below(seeds.size())]]) {
                sample.rows.push_back(*r);
            }
        }
        out.push_back(fit_exponent(sample, decoder, basis, window, code).slope);
    }
    return out;
}

struct CollapsePoint {
    std::string code;
    std::string decoder;
    char basis = 'X';
    double lambda = 0.0;
    /// log10(mean epsilon) / divisor.
    double value = 0.0;
};

/// Rescales each series' log10 disorder mean by its code's divisor (the
/// expected exponent over 2), so curves with a common law overlap.
inline std::vector<CollapsePoint> collapse_transform(const std::vector<SweepResult> &results,
                                                     const std::map<std::string, double> &divisors) {
    std::vector<CollapsePoint> out;
    std::optional<std::vector<double>> grid;
    for (const auto &res : results) {
        for (const auto &key : series_keys(res)) {
            auto div = divisors.find(key.code);
            if (div == divisors.end()) {
                throw Error(ErrorKind::invalid_argument, "no collapse divisor for code '" + key.code + "'");
            }
            if (!(div->second > 0.0)) {
                throw Error(ErrorKind::invalid_argument, "collapse divisors must be positive");
            }
            auto curve = disorder_mean(res, key.decoder, key.basis, key.code);
            std::vector<double> lambdas;
            for (const auto &p : curve) lambdas.push_back(p.lambda);
            if (!grid) {
                grid = lambdas;
            } else if (*grid != lambdas) {
                throw Error(ErrorKind::invalid_argument, "collapse inputs do not share a lambda grid");
            }
            for (const auto &p : curve) {
                out.push_back({key.code, key.decoder, key.basis, p.lambda,
                               std::log10(std::max(p.mean, kEpsilonFloor)) / div->second});
            }
        }
    }
    return out;
}

struct PlotStyle {
    int width = 640;
    int height = 480;
    std::string title;
};

struct FitOverlay {
    std::string label;
    FitReport fit;
};

/// Log-log SVG: one polyline per series (disorder means) plus a dashed line
/// per fit across its window.
inline void emit_svg(std::ostream &os, const SweepResult &result, const std::vector<FitOverlay> &fits,
                     const PlotStyle &style = {}) {
    struct Series {
        SeriesKey key;
        std::vector<CurvePoint> points;
    };
    std::vector<Series> series;
    double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
    for (const auto &key : series_keys(result)) {
        Series s{key, {}};
        for (const auto &p : disorder_mean(result, key.decoder, key.basis, key.code)) {
            if (p.lambda > 0.0 && p.mean > kEpsilonFloor) {
                s.points.push_back(p);
                xmin = std::min(xmin, std::log10(p.lambda));
                xmax = std::max(xmax, std::log10(p.lambda));
                ymin = std::min(ymin, std::log10(p.mean));
                ymax = std::max(ymax, std::log10(p.mean));
            }
        }
        series.push_back(std::move(s));
    }
    if (!(xmax > xmin)) {
        xmin = std::isfinite(xmin) ? xmin - 1.0 : -3.0;
        xmax = xmin + 2.0;
    }
    if (!(ymax > ymin)) {
        ymin = std::isfinite(ymin) ? ymin - 1.0 : -10.0;
        ymax = ymin + 2.0;
    }
    const double margin = 60.0;
    const double w = style.width;
    const double h = style.height;
    auto px = [&](double lx) { return margin + (lx - xmin) / (xmax - xmin) * (w - 2 * margin); };
    auto py = [&](double ly) { return h - margin - (ly - ymin) / (ymax - ymin) * (h - 2 * margin); };
    static const char *palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b"};

    std::ostringstream body;
    body.precision(6);
    body << std::fixed;
    body << "<rect x=\"" << margin << "\" y=\"" << margin << "\" width=\"" << (w - 2 * margin) << "\" height=\""
         << (h - 2 * margin) << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int d = static_cast<int>(std::ceil(xmin)); d <= static_cast<int>(std::floor(xmax)); ++d) {
        body << "<text x=\"" << px(d) << "\" y=\"" << (h - margin + 18) << "\" font-size=\"12\" text-anchor=\"middle\">"
             << "1e" << d << "</text>\n";
    }
    for (int d = static_cast<int>(std::ceil(ymin)); d <= static_cast<int>(std::floor(ymax)); ++d) {
        body << "<text x=\"" << (margin - 6) << "\" y=\"" << py(d) << "\" font-size=\"12\" text-anchor=\"end\">"
             << "1e" << d << "</text>\n";
    }
    body << "<text x=\"" << w / 2 << "\" y=\"" << (h - 12) << "\" font-size=\"14\" text-anchor=\"middle\">lambda</text>\n";
    body << "<text x=\"16\" y=\"" << h / 2 << "\" font-size=\"14\" transform=\"rotate(-90 16 " << h / 2
         << ")\" text-anchor=\"middle\">epsilon</text>\n";
    for (std::size_t i = 0; i < series.size(); ++i) {
        const auto &s = series[i];
        const char *color = palette[i % std::size(palette)];
        body << "<polyline class=\"series\" data-code=\"" << s.key.code << "\" data-decoder=\"" << s.key.decoder
             << "\" data-basis=\"" << s.key.basis << "\" fill=\"none\" stroke=\"" << color
             << "\" stroke-width=\"1.5\" points=\"";
        for (const auto &p : s.points) {
            body << px(std::log10(p.lambda)) << ',' << py(std::log10(p.mean)) << ' ';
        }
        body << "\"/>\n";
        body << "<text x=\"" << (margin + 8) << "\" y=\"" << (margin + 16 + 16 * static_cast<double>(i))
             << "\" font-size=\"12\" fill=\"" << color << "\">" << s.key.code << ' ' << s.key.decoder << ' '
             << s.key.basis << "</text>\n";
    }
    for (const auto &f : fits) {
        double a = std::log10(f.fit.window.lo);
        double b = std::log10(f.fit.window.hi);
        body << "<line class=\"fit\" stroke=\"gray\" stroke-dasharray=\"6,4\" x1=\"" << px(a) << "\" y1=\""
             << py(f.fit.intercept + f.fit.slope * a) << "\" x2=\"" << px(b) << "\" y2=\""
             << py(f.fit.intercept + f.fit.slope * b) << "\"><title>" << f.label << " slope "
             << format_real(f.fit.slope) << "</title></line>\n";
    }
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << style.width << "\" height=\"" << style.height
       << "\" viewBox=\"0 0 " << style.width << ' ' << style.height << "\">\n";
    if (!style.title.empty()) {
        os << "<title>" << style.title << "</title>\n";
    }
    os << body.str() << "</svg>\n";
}

inline void emit_svg(const std::string &path, const SweepResult &result, const std::vector<FitOverlay> &fits,
                     const PlotStyle &style = {}) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) {
        throw Error(ErrorKind::io, "cannot write '" + path + "'");
    }
    emit_svg(os, result, fits, style);
    if (!os) {
        throw Error(ErrorKind::io, "write failed for '" + path + "'");
    }
}

}  // namespace pqd
