#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "autocenet/volume.hpp"

namespace autocenet {

struct Point3 {
    double x = 0, y = 0, z = 0;
    bool operator==(const Point3&) const = default;
};

/// Boundary voxel centres in millimetres (index * spacing), lexicographic by
/// (z, y, x) index.
struct SurfacePointSet {
    std::vector<Point3> points;
    bool empty() const { return points.empty(); }
    std::size_t size() const { return points.size(); }
};

/// A surface distance was requested for an empty surface.
class UndefinedMetric : public DataError {
public:
    using DataError::DataError;
};

struct ConfusionCounts {
    std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;
};

struct OverlapScores {
    double f1 = 0, precision = 0, sensitivity = 0;
};

enum class DistanceMode { accelerated, brute_force };

ConfusionCounts confusion_counts(const LabelVolume& pred, const LabelVolume& gt);

/// P = tp/(tp+fp), S = tp/(tp+fn), F1 their harmonic mean. Both volumes empty
/// scores 1 everywhere; exactly one side empty scores 0.
OverlapScores f1_precision_sensitivity(std::uint64_t tp, std::uint64_t fp, std::uint64_t fn);

/// Harmonic mean of precision and sensitivity.
double f1_from(double precision, double sensitivity);

SurfacePointSet extract_surface(const LabelVolume& volume);

/// Exact nearest-neighbour queries over a fixed point set (k-d tree).
class NearestNeighborIndex {
public:
    explicit NearestNeighborIndex(std::vector<Point3> points);
    ~NearestNeighborIndex();
    NearestNeighborIndex(NearestNeighborIndex&&) noexcept;
    NearestNeighborIndex& operator=(NearestNeighborIndex&&) noexcept;

    double nearest_squared(const Point3& q) const;
    double nearest(const Point3& q) const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Distance from every point of `from` to its nearest point of `to`.
std::vector<double> directed_distances(const SurfacePointSet& from, const SurfacePointSet& to,
                                       DistanceMode mode = DistanceMode::accelerated);

/// Nearest-rank quantile of unsorted values; 1.0 gives the maximum.
double nearest_rank_quantile(std::vector<double> values, double fraction);

/// Symmetric (percentile) Hausdorff distance: the larger of the two directed
/// quantiles. Throws UndefinedMetric on an empty set.
double hausdorff(const SurfacePointSet& a, const SurfacePointSet& b, double percentile = 1.0,
                 DistanceMode mode = DistanceMode::accelerated);

/// Average symmetric surface distance.
double assd(const SurfacePointSet& a, const SurfacePointSet& b, DistanceMode mode = DistanceMode::accelerated);

struct MetricsReport {
    double dsc = 0, precision = 0, sensitivity = 0;
    /// Unset when either surface is empty.
    std::optional<double> hd, hd95, assd;
    std::uint64_t tp = 0, fp = 0, fn = 0;

    bool operator==(const MetricsReport&) const = default;
};

MetricsReport evaluate(const LabelVolume& pred, const LabelVolume& gt, DistanceMode mode = DistanceMode::accelerated);

/// (before - after) / before.
double relative_reduction(double before, double after);

struct CaseReport {
    std::string case_id;
    MetricsReport report;
};

inline constexpr const char* kMetricsCsvHeader = "case,dsc,precision,sensitivity,hd_mm,hd95_mm,assd_mm,tp,fp,fn";

/// Shortest text that parses back to exactly `value`.
std::string format_double(double value);

void write_metrics_csv(std::ostream& out, const std::vector<CaseReport>& rows);
std::vector<CaseReport> read_metrics_csv(std::istream& in);

struct MeanStd {
    double mean = 0, std = 0;
    std::size_t count = 0;
};

/// Population mean and standard deviation over the defined values.
MeanStd mean_std(const std::vector<double>& values);

struct AggregateReport {
    MeanStd dsc, precision, sensitivity, hd, hd95, assd;
};

AggregateReport aggregate(const std::vector<CaseReport>& rows);

/// "metric,mean,std,count,display" rows, display formatted like "0.96±0.01".
void write_aggregate_csv(std::ostream& out, const AggregateReport& agg);

}  // namespace autocenet
