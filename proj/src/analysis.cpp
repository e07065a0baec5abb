#include "fusiongen/analysis.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include "fusiongen/fft.hpp"

namespace fusiongen {

PsdResult welch_psd(const double* x, int n, double sample_rate_hz) {
    if (n < 2) throw std::runtime_error("welch_psd: signal too short");
    if (sample_rate_hz <= 0.0) throw std::runtime_error("welch_psd: invalid sample rate");
    const int nperseg = std::min(n, static_cast<int>(std::llround(sample_rate_hz)));
    const int step = std::max(1, nperseg / 2);

    std::vector<double> window(static_cast<std::size_t>(nperseg));
    double win_power = 0.0;
    for (int i = 0; i < nperseg; ++i) {
        window[static_cast<std::size_t>(i)] =
            0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * i / nperseg));
        win_power += window[static_cast<std::size_t>(i)] * window[static_cast<std::size_t>(i)];
    }

    const int nbins = nperseg / 2 + 1;
    PsdResult res;
    res.freqs.resize(static_cast<std::size_t>(nbins));
    res.power.assign(static_cast<std::size_t>(nbins), 0.0);
    for (int k = 0; k < nbins; ++k)
        res.freqs[static_cast<std::size_t>(k)] = static_cast<double>(k) * sample_rate_hz / nperseg;

    int n_segments = 0;
    std::vector<double> seg(static_cast<std::size_t>(nperseg));
    for (int start = 0; start + nperseg <= n; start += step) {
        for (int i = 0; i < nperseg; ++i)
            seg[static_cast<std::size_t>(i)] = x[start + i] * window[static_cast<std::size_t>(i)];
        const auto bins = rfft(seg.data(), nperseg);
        for (int k = 0; k < nbins; ++k) {
            double p = std::norm(bins[static_cast<std::size_t>(k)]);
            if (k != 0 && !(nperseg % 2 == 0 && k == nbins - 1)) p *= 2.0;  // one-sided
            res.power[static_cast<std::size_t>(k)] += p;
        }
        ++n_segments;
    }
    const double scale = 1.0 / (sample_rate_hz * win_power * n_segments);
    for (double& p : res.power) p *= scale;
    return res;
}

PsdResult welch_psd(const Vec& row, double sample_rate_hz) {
    return welch_psd(row.data(), static_cast<int>(row.size()), sample_rate_hz);
}

double band_power(const PsdResult& psd, double lo_hz, double hi_hz) {
    if (psd.freqs.size() < 2) return 0.0;
    const double df = psd.freqs[1] - psd.freqs[0];
    double acc = 0.0;
    for (std::size_t k = 0; k < psd.freqs.size(); ++k)
        if (psd.freqs[k] >= lo_hz && psd.freqs[k] <= hi_hz) acc += psd.power[k] * df;
    return acc;
}

PsdResult mean_psd(const std::vector<const Trial*>& trials, double sample_rate_hz) {
    if (trials.empty()) throw std::runtime_error("mean_psd: no trials");
    PsdResult total;
    int count = 0;
    for (const Trial* tr : trials) {
        for (int c = 0; c < tr->channels(); ++c) {
            const Vec row = tr->samples.row(c).transpose();
            const PsdResult p = welch_psd(row, sample_rate_hz);
            if (total.freqs.empty()) {
                total = p;
            } else {
                if (p.power.size() != total.power.size())
                    throw std::runtime_error("mean_psd: inconsistent trial lengths");
                for (std::size_t k = 0; k < p.power.size(); ++k) total.power[k] += p.power[k];
            }
            ++count;
        }
    }
    for (double& p : total.power) p /= static_cast<double>(count);
    return total;
}

std::vector<std::array<double, 2>> project_2d(const std::vector<const Trial*>& trials) {
    if (trials.empty()) return {};
    const int C = trials.front()->channels();
    const int dim = C * C;
    const int n = static_cast<int>(trials.size());

    Mat feats(n, dim);
    for (int i = 0; i < n; ++i) {
        const Mat& x = trials[static_cast<std::size_t>(i)]->samples;
        const Mat cov = x * x.transpose() / static_cast<double>(x.cols());
        for (int a = 0; a < C; ++a)
            for (int b = 0; b < C; ++b) feats(i, a * C + b) = cov(a, b);
    }
    const Vec mean = feats.colwise().mean().transpose();
    feats.rowwise() -= mean.transpose();

    const Mat scatter = feats.transpose() * feats / static_cast<double>(std::max(1, n - 1));
    Eigen::SelfAdjointEigenSolver<Mat> eig(scatter);
    if (eig.info() != Eigen::Success) throw std::runtime_error("project_2d: eigensolver failed");

    std::vector<std::array<double, 2>> points(static_cast<std::size_t>(n));
    for (int axis = 0; axis < 2; ++axis) {
        const int col = dim - 1 - axis;  // Eigen sorts ascending
        Vec pc = dim > col && col >= 0 ? eig.eigenvectors().col(col) : Vec::Zero(dim);
        // Deterministic sign: largest-magnitude component positive.
        int arg = 0;
        for (int i = 1; i < dim; ++i)
            if (std::abs(pc(i)) > std::abs(pc(arg))) arg = i;
        if (pc(arg) < 0.0) pc = -pc;
        const Vec proj = feats * pc;
        for (int i = 0; i < n; ++i) points[static_cast<std::size_t>(i)][static_cast<std::size_t>(axis)] = proj(i);
    }
    return points;
}

std::vector<std::array<double, 2>> project_2d(const Dataset& ds) {
    std::vector<const Trial*> ptrs;
    ptrs.reserve(ds.trials.size());
    for (const Trial& t : ds.trials) ptrs.push_back(&t);
    return project_2d(ptrs);
}

// ---------------------------------------------------------------------------
// SVG output
// ---------------------------------------------------------------------------

namespace {

constexpr int kWidth = 720;
constexpr int kHeight = 440;
constexpr int kMargin = 60;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f"};

struct Range {
    double lo = 0.0, hi = 1.0;
    void expand(double v) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    double map(double v, double pix_lo, double pix_hi) const {
        const double span = hi - lo;
        const double t = span > 0.0 ? (v - lo) / span : 0.5;
        return pix_lo + t * (pix_hi - pix_lo);
    }
};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

void svg_header(std::ofstream& out, const std::string& title) {
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
        << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" "
        << "font-family=\"sans-serif\" font-size=\"16\">" << title << "</text>\n";
}

void svg_axes(std::ofstream& out, const Range& rx, const Range& ry, const std::string& x_label,
              const std::string& y_label) {
    out << "<rect x=\"" << kMargin << "\" y=\"" << kMargin << "\" width=\""
        << kWidth - 2 * kMargin << "\" height=\"" << kHeight - 2 * kMargin
        << "\" fill=\"none\" stroke=\"#333\"/>\n";
    out << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 12
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << x_label
        << "</text>\n";
    out << "<text x=\"16\" y=\"" << kHeight / 2
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
        << "transform=\"rotate(-90 16 " << kHeight / 2 << ")\">" << y_label << "</text>\n";
    out << "<text x=\"" << kMargin << "\" y=\"" << kHeight - kMargin + 16
        << "\" font-family=\"sans-serif\" font-size=\"10\">" << fmt(rx.lo) << "</text>\n";
    out << "<text x=\"" << kWidth - kMargin << "\" y=\"" << kHeight - kMargin + 16
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" << fmt(rx.hi)
        << "</text>\n";
    out << "<text x=\"" << kMargin - 4 << "\" y=\"" << kHeight - kMargin
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" << fmt(ry.lo)
        << "</text>\n";
    out << "<text x=\"" << kMargin - 4 << "\" y=\"" << kMargin + 4
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" << fmt(ry.hi)
        << "</text>\n";
}

}  // namespace

void write_svg_lines(const std::filesystem::path& path, const std::string& title,
                     const std::vector<SvgSeries>& series, const std::string& x_label,
                     const std::string& y_label) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_svg_lines: cannot write " + path.string());
    Range rx, ry;
    bool first = true;
    for (const auto& s : series) {
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (first) {
                rx.lo = rx.hi = s.x[i];
                ry.lo = ry.hi = s.y[i];
                first = false;
            }
            rx.expand(s.x[i]);
            ry.expand(s.y[i]);
        }
    }
    svg_header(out, title);
    svg_axes(out, rx, ry, x_label, y_label);
    for (std::size_t si = 0; si < series.size(); ++si) {
        const auto& s = series[si];
        const char* color = kPalette[si % (sizeof(kPalette) / sizeof(kPalette[0]))];
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            const double px = rx.map(s.x[i], kMargin, kWidth - kMargin);
            const double py = ry.map(s.y[i], kHeight - kMargin, kMargin);
            out << fmt(px) << "," << fmt(py) << " ";
        }
        out << "\"/>\n";
        out << "<text x=\"" << kWidth - kMargin - 8 << "\" y=\""
            << kMargin + 16 + 16 * static_cast<int>(si)
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\" fill=\""
            << color << "\">" << s.label << "</text>\n";
    }
    out << "</svg>\n";
}

void write_svg_scatter(const std::filesystem::path& path, const std::string& title,
                       const std::vector<std::array<double, 2>>& points,
                       const std::vector<int>& groups) {
    if (points.size() != groups.size())
        throw std::runtime_error("write_svg_scatter: point/group count mismatch");
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_svg_scatter: cannot write " + path.string());
    Range rx, ry;
    bool first = true;
    for (const auto& p : points) {
        if (first) {
            rx.lo = rx.hi = p[0];
            ry.lo = ry.hi = p[1];
            first = false;
        }
        rx.expand(p[0]);
        ry.expand(p[1]);
    }
    svg_header(out, title);
    svg_axes(out, rx, ry, "component 1", "component 2");
    for (std::size_t i = 0; i < points.size(); ++i) {
        const char* color =
            kPalette[static_cast<std::size_t>(groups[i] < 0 ? 0 : groups[i]) %
                     (sizeof(kPalette) / sizeof(kPalette[0]))];
        out << "<circle cx=\"" << fmt(rx.map(points[i][0], kMargin, kWidth - kMargin))
            << "\" cy=\"" << fmt(ry.map(points[i][1], kHeight - kMargin, kMargin))
            << "\" r=\"3\" fill=\"" << color << "\" fill-opacity=\"0.7\"/>\n";
    }
    out << "</svg>\n";
}

}  // namespace fusiongen
