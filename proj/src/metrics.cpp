#include "autocenet/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

namespace autocenet {

ConfusionCounts confusion_counts(const LabelVolume& pred, const LabelVolume& gt) {
    require_same_dims(pred, gt, "confusion_counts");
    ConfusionCounts c;
    const auto p = pred.values();
    const auto g = gt.values();
    for (std::size_t i = 0; i < p.size(); ++i) {
        const bool a = p[i] != 0, b = g[i] != 0;
        if (a && b) ++c.tp;
        else if (a) ++c.fp;
        else if (b) ++c.fn;
        else ++c.tn;
    }
    return c;
}

double f1_from(double precision, double sensitivity) {
    const double denom = precision + sensitivity;
    return denom > 0.0 ? 2.0 * precision * sensitivity / denom : 0.0;
}

OverlapScores f1_precision_sensitivity(std::uint64_t tp, std::uint64_t fp, std::uint64_t fn) {
    const bool pred_empty = tp + fp == 0;
    const bool gt_empty = tp + fn == 0;
    if (pred_empty && gt_empty) return {1.0, 1.0, 1.0};
    if (pred_empty || gt_empty) return {0.0, 0.0, 0.0};
    OverlapScores s;
    s.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    s.sensitivity = static_cast<double>(tp) / static_cast<double>(tp + fn);
    s.f1 = f1_from(s.precision, s.sensitivity);
    return s;
}

SurfacePointSet extract_surface(const LabelVolume& volume) {
    SurfacePointSet s;
    const auto& d = volume.dims();
    const auto& sp = volume.spacing();
    for (std::size_t z = 0; z < d[2]; ++z)
        for (std::size_t y = 0; y < d[1]; ++y)
            for (std::size_t x = 0; x < d[0]; ++x) {
                if (!volume.at(x, y, z)) continue;
                const bool border = x == 0 || y == 0 || z == 0 || x + 1 == d[0] || y + 1 == d[1] || z + 1 == d[2];
                if (border || !volume.at(x - 1, y, z) || !volume.at(x + 1, y, z) || !volume.at(x, y - 1, z) ||
                    !volume.at(x, y + 1, z) || !volume.at(x, y, z - 1) || !volume.at(x, y, z + 1)) {
                    s.points.push_back({static_cast<double>(x) * sp[0], static_cast<double>(y) * sp[1],
                                        static_cast<double>(z) * sp[2]});
                }
            }
    return s;
}

namespace {

inline double coord(const Point3& p, int axis) { return axis == 0 ? p.x : axis == 1 ? p.y : p.z; }

inline double squared_distance(const Point3& a, const Point3& b) {
    const double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
    return dx * dx + dy * dy + dz * dz;
}

}  // namespace

// Implicit k-d tree: the median of every range [lo, hi) sits at its midpoint,
// left half below, right half above, along the axis of widest spread.
struct NearestNeighborIndex::Impl {
    std::vector<Point3> points;
    std::vector<int> axes;

    void build(std::size_t lo, std::size_t hi) {
        if (hi - lo <= 1) return;
        std::array<double, 3> mn{}, mx{};
        mn.fill(std::numeric_limits<double>::infinity());
        mx.fill(-std::numeric_limits<double>::infinity());
        for (std::size_t i = lo; i < hi; ++i) {
            for (int a = 0; a < 3; ++a) {
                mn[a] = std::min(mn[a], coord(points[i], a));
                mx[a] = std::max(mx[a], coord(points[i], a));
            }
        }
        int axis = 0;
        for (int a = 1; a < 3; ++a) {
            if (mx[a] - mn[a] > mx[axis] - mn[axis]) axis = a;
        }
        const std::size_t mid = lo + (hi - lo) / 2;
        std::nth_element(points.begin() + static_cast<std::ptrdiff_t>(lo),
                         points.begin() + static_cast<std::ptrdiff_t>(mid),
                         points.begin() + static_cast<std::ptrdiff_t>(hi),
                         [axis](const Point3& p, const Point3& q) { return coord(p, axis) < coord(q, axis); });
        axes[mid] = axis;
        build(lo, mid);
        build(mid + 1, hi);
    }

    void search(std::size_t lo, std::size_t hi, const Point3& q, double& best) const {
        if (lo >= hi) return;
        const std::size_t mid = lo + (hi - lo) / 2;
        best = std::min(best, squared_distance(points[mid], q));
        if (hi - lo == 1) return;
        const int axis = axes[mid];
        const double diff = coord(q, axis) - coord(points[mid], axis);
        if (diff < 0) {
            search(lo, mid, q, best);
            if (diff * diff <= best) search(mid + 1, hi, q, best);
        } else {
            search(mid + 1, hi, q, best);
            if (diff * diff <= best) search(lo, mid, q, best);
        }
    }
};

NearestNeighborIndex::NearestNeighborIndex(std::vector<Point3> points) : impl_(std::make_unique<Impl>()) {
    if (points.empty()) throw UndefinedMetric("nearest-neighbour index over an empty point set");
    impl_->points = std::move(points);
    impl_->axes.assign(impl_->points.size(), 0);
    impl_->build(0, impl_->points.size());
}

NearestNeighborIndex::~NearestNeighborIndex() = default;
NearestNeighborIndex::NearestNeighborIndex(NearestNeighborIndex&&) noexcept = default;
NearestNeighborIndex& NearestNeighborIndex::operator=(NearestNeighborIndex&&) noexcept = default;

double NearestNeighborIndex::nearest_squared(const Point3& q) const {
    double best = std::numeric_limits<double>::infinity();
    impl_->search(0, impl_->points.size(), q, best);
    return best;
}

double NearestNeighborIndex::nearest(const Point3& q) const { return std::sqrt(nearest_squared(q)); }

std::vector<double> directed_distances(const SurfacePointSet& from, const SurfacePointSet& to, DistanceMode mode) {
    if (from.empty() || to.empty()) throw UndefinedMetric("surface distance with an empty surface");
    std::vector<double> out;
    out.reserve(from.size());
    if (mode == DistanceMode::brute_force) {
        for (const auto& p : from.points) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& q : to.points) best = std::min(best, squared_distance(p, q));
            out.push_back(std::sqrt(best));
        }
        return out;
    }
    const NearestNeighborIndex index(to.points);
    for (const auto& p : from.points) out.push_back(index.nearest(p));
    return out;
}

double nearest_rank_quantile(std::vector<double> values, double fraction) {
    if (values.empty()) throw UndefinedMetric("quantile of an empty set");
    if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError("quantile fraction must be in (0, 1]");
    const double n = static_cast<double>(values.size());
    // Guard against 0.95 * 20 landing a hair above 19.
    auto rank = static_cast<std::size_t>(std::ceil(fraction * n - 1e-9));
    rank = std::clamp<std::size_t>(rank, 1, values.size());
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(rank - 1), values.end());
    return values[rank - 1];
}

double hausdorff(const SurfacePointSet& a, const SurfacePointSet& b, double percentile, DistanceMode mode) {
    const double ab = nearest_rank_quantile(directed_distances(a, b, mode), percentile);
    const double ba = nearest_rank_quantile(directed_distances(b, a, mode), percentile);
    return std::max(ab, ba);
}

double assd(const SurfacePointSet& a, const SurfacePointSet& b, DistanceMode mode) {
    const auto ab = directed_distances(a, b, mode);
    const auto ba = directed_distances(b, a, mode);
    const double total = std::accumulate(ab.begin(), ab.end(), 0.0) + std::accumulate(ba.begin(), ba.end(), 0.0);
    return total / static_cast<double>(ab.size() + ba.size());
}

MetricsReport evaluate(const LabelVolume& pred, const LabelVolume& gt, DistanceMode mode) {
    require_same_dims(pred, gt, "evaluate");
    if (pred.spacing() != gt.spacing()) throw DimensionError("evaluate: spacings differ; resample explicitly first");
    const auto c = confusion_counts(pred, gt);
    const auto s = f1_precision_sensitivity(c.tp, c.fp, c.fn);
    MetricsReport r;
    r.dsc = s.f1;
    r.precision = s.precision;
    r.sensitivity = s.sensitivity;
    r.tp = c.tp;
    r.fp = c.fp;
    r.fn = c.fn;

    const auto sp = extract_surface(pred);
    const auto sg = extract_surface(gt);
    if (sp.empty() || sg.empty()) return r;
    const auto ab = directed_distances(sp, sg, mode);
    const auto ba = directed_distances(sg, sp, mode);
    r.hd = std::max(nearest_rank_quantile(ab, 1.0), nearest_rank_quantile(ba, 1.0));
    r.hd95 = std::max(nearest_rank_quantile(ab, 0.95), nearest_rank_quantile(ba, 0.95));
    const double total = std::accumulate(ab.begin(), ab.end(), 0.0) + std::accumulate(ba.begin(), ba.end(), 0.0);
    r.assd = total / static_cast<double>(ab.size() + ba.size());
    return r;
}

double relative_reduction(double before, double after) {
    if (before == 0.0) throw ConfigError("relative_reduction: baseline is zero");
    return (before - after) / before;
}

std::string format_double(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

namespace {

std::string optional_field(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

double parse_double(const std::string& s, std::size_t line) {
    double v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        throw DataError("metrics csv line " + std::to_string(line) + ": bad number '" + s + "'");
    }
    return v;
}

std::uint64_t parse_count(const std::string& s, std::size_t line) {
    std::uint64_t v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        throw DataError("metrics csv line " + std::to_string(line) + ": bad count '" + s + "'");
    }
    return v;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    fields.push_back(cur);
    return fields;
}

}  // namespace

void write_metrics_csv(std::ostream& out, const std::vector<CaseReport>& rows) {
    out << kMetricsCsvHeader << '\n';
    for (const auto& row : rows) {
        const auto& r = row.report;
        out << row.case_id << ',' << format_double(r.dsc) << ',' << format_double(r.precision) << ','
            << format_double(r.sensitivity) << ',' << optional_field(r.hd) << ',' << optional_field(r.hd95) << ','
            << optional_field(r.assd) << ',' << r.tp << ',' << r.fp << ',' << r.fn << '\n';
    }
}

std::vector<CaseReport> read_metrics_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw DataError("metrics csv: empty input");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kMetricsCsvHeader) throw DataError("metrics csv: unexpected header '" + line + "'");
    std::vector<CaseReport> rows;
    std::size_t n = 1;
    while (std::getline(in, line)) {
        ++n;
        if (line.empty()) continue;
        const auto f = split_csv(line);
        if (f.size() != 10) throw DataError("metrics csv line " + std::to_string(n) + ": expected 10 fields");
        CaseReport row;
        row.case_id = f[0];
        row.report.dsc = parse_double(f[1], n);
        row.report.precision = parse_double(f[2], n);
        row.report.sensitivity = parse_double(f[3], n);
        if (!f[4].empty()) row.report.hd = parse_double(f[4], n);
        if (!f[5].empty()) row.report.hd95 = parse_double(f[5], n);
        if (!f[6].empty()) row.report.assd = parse_double(f[6], n);
        row.report.tp = parse_count(f[7], n);
        row.report.fp = parse_count(f[8], n);
        row.report.fn = parse_count(f[9], n);
        rows.push_back(std::move(row));
    }
    return rows;
}

MeanStd mean_std(const std::vector<double>& values) {
    MeanStd m;
    m.count = values.size();
    if (values.empty()) return m;
    m.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    double v = 0.0;
    for (double x : values) v += (x - m.mean) * (x - m.mean);
    m.std = std::sqrt(v / static_cast<double>(values.size()));
    return m;
}

AggregateReport aggregate(const std::vector<CaseReport>& rows) {
    std::vector<double> dsc, prec, sens, hd, hd95, as;
    for (const auto& row : rows) {
        const auto& r = row.report;
        dsc.push_back(r.dsc);
        prec.push_back(r.precision);
        sens.push_back(r.sensitivity);
        if (r.hd) hd.push_back(*r.hd);
        if (r.hd95) hd95.push_back(*r.hd95);
        if (r.assd) as.push_back(*r.assd);
    }
    return {mean_std(dsc), mean_std(prec), mean_std(sens), mean_std(hd), mean_std(hd95), mean_std(as)};
}

void write_aggregate_csv(std::ostream& out, const AggregateReport& agg) {
    auto row = [&out](const char* name, const MeanStd& m) {
        std::ostringstream display;
        display.setf(std::ios::fixed);
        display.precision(2);
        display << m.mean << "±" << m.std;
        out << name << ',' << format_double(m.mean) << ',' << format_double(m.std) << ',' << m.count << ','
            << display.str() << '\n';
    };
    out << "metric,mean,std,count,display\n";
    row("dsc", agg.dsc);
    row("precision", agg.precision);
    row("sensitivity", agg.sensitivity);
    row("hd_mm", agg.hd);
    row("hd95_mm", agg.hd95);
    row("assd_mm", agg.assd);
}

}  // namespace autocenet
