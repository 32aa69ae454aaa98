#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "baypod/grids.hpp"

namespace baypod {

class CacheError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Crank-Nicolson solve of f_t = kappa f_xx with Dirichlet boundaries.
// Row i of the result is the field at tgrid.times[i]; row 0 is the initial
// condition (it wins over the boundary data at t=0). `substeps` internal
// steps are taken per TimeGrid interval.
Eigen::MatrixXd solve_heat(double kappa, const SpatialGrid& sgrid, const TimeGrid& tgrid,
                           const BoundaryConditions& bc, int substeps = 4);

// 3 sin(2t) (1 - x/L) + 3 x/L sampled on the grid.
std::vector<double> particular_solution(double t, const SpatialGrid& sgrid);

Snapshot homogenize(const Snapshot& s, const SpatialGrid& sgrid, const TimeGrid& tgrid);
Snapshot dehomogenize(const Snapshot& s, const SpatialGrid& sgrid, const TimeGrid& tgrid);

// Source of full-order trajectories, keyed by kappa index. run_al depends on
// this interface so tests can substitute rigged data.
class FomSource {
  public:
    virtual ~FomSource() = default;
    virtual const Eigen::MatrixXd& trajectory(int kappa_index, double kappa) = 0;
    virtual const SpatialGrid& sgrid() const = 0;
    virtual const TimeGrid& tgrid() const = 0;

    std::vector<Snapshot> generate_snapshots(int kappa_index, double kappa,
                                             const std::vector<int>& time_indices);
};

// Disk-backed (optionally memory-only) trajectory cache. One binary file of
// little-endian f64 per kappa plus a JSON manifest with a sha256 per entry.
class SnapshotCache : public FomSource {
  public:
    SnapshotCache(std::filesystem::path dir, SpatialGrid sgrid, TimeGrid tgrid,
                  BoundaryConditions bc, int substeps);

    const Eigen::MatrixXd& trajectory(int kappa_index, double kappa) override;
    const SpatialGrid& sgrid() const override { return sgrid_; }
    const TimeGrid& tgrid() const override { return tgrid_; }

    int solve_count() const { return solve_count_; }
    bool has_entry(int kappa_index) const;

  private:
    std::filesystem::path entry_path(int kappa_index) const;
    void load_manifest();
    void store_manifest();

    std::filesystem::path dir_;  // empty -> memory-only
    SpatialGrid sgrid_;
    TimeGrid tgrid_;
    BoundaryConditions bc_;
    int substeps_;
    int solve_count_ = 0;
    std::map<int, Eigen::MatrixXd> memory_;
    std::map<int, std::pair<double, std::string>> manifest_;  // index -> (kappa, sha256)
    std::mutex write_mutex_;
};

std::string sha256_hex(const void* data, std::size_t len);

}  // namespace baypod
