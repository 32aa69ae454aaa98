#include "baypod/heat_fom.hpp"

#include <openssl/evp.h>

#include <cstdio>
#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

namespace baypod {

namespace {

// Thomas algorithm for a constant-coefficient symmetric tridiagonal system:
// diag*x_j + off*(x_{j-1} + x_{j+1}) = rhs_j.
void solve_tridiag_const(double diag, double off, Eigen::VectorXd& rhs, Eigen::VectorXd& cp,
                         Eigen::VectorXd& x) {
    const int n = static_cast<int>(rhs.size());
    cp[0] = off / diag;
    rhs[0] /= diag;
    for (int j = 1; j < n; ++j) {
        const double m = diag - off * cp[j - 1];
        cp[j] = off / m;
        rhs[j] = (rhs[j] - off * rhs[j - 1]) / m;
    }
    x[n - 1] = rhs[n - 1];
    for (int j = n - 2; j >= 0; --j) x[j] = rhs[j] - cp[j] * x[j + 1];
}

}  // namespace

Eigen::MatrixXd solve_heat(double kappa, const SpatialGrid& sgrid, const TimeGrid& tgrid,
                           const BoundaryConditions& bc, int substeps) {
    if (!(kappa > 0.0)) throw std::invalid_argument("solve_heat: kappa must be > 0");
    if (substeps < 1) throw std::invalid_argument("solve_heat: substeps must be >= 1");

    const int n_x = sgrid.n_x;
    const int n_interior = n_x - 2;
    const double dx = sgrid.spacing();

    Eigen::MatrixXd traj(tgrid.n_t, n_x);
    Eigen::VectorXd f(n_x);
    for (int j = 0; j < n_x; ++j) f[j] = bc.initial(sgrid.positions[j]);
    traj.row(0) = f.transpose();

    Eigen::VectorXd rhs(n_interior), cp(n_interior), sol(n_interior);

    for (int i = 1; i < tgrid.n_t; ++i) {
        const double t0 = tgrid.times[i - 1];
        const double dt = (tgrid.times[i] - t0) / substeps;
        const double r = kappa * dt / (dx * dx);
        const double diag = 1.0 + r;
        const double off = -0.5 * r;
        for (int s = 0; s < substeps; ++s) {
            const double ts = t0 + (s + 1) * dt;
            for (int j = 0; j < n_interior; ++j) {
                rhs[j] = f[j + 1] + 0.5 * r * (f[j] - 2.0 * f[j + 1] + f[j + 2]);
            }
            const double bl = bc.left(ts);
            const double br = bc.right(ts);
            rhs[0] += 0.5 * r * bl;
            rhs[n_interior - 1] += 0.5 * r * br;
            solve_tridiag_const(diag, off, rhs, cp, sol);
            f[0] = bl;
            f.segment(1, n_interior) = sol;
            f[n_x - 1] = br;
            if (!f.allFinite()) {
                std::ostringstream msg;
                msg << "solve_heat: non-finite value at kappa=" << kappa << ", time index " << i
                    << ", substep " << s;
                throw std::runtime_error(msg.str());
            }
        }
        traj.row(i) = f.transpose();
    }
    return traj;
}

std::vector<double> particular_solution(double t, const SpatialGrid& sgrid) {
    std::vector<double> field(sgrid.n_x);
    const double a = 3.0 * std::sin(2.0 * t);
    for (int j = 0; j < sgrid.n_x; ++j) {
        const double xi = sgrid.positions[j] / sgrid.length;
        field[j] = a * (1.0 - xi) + 3.0 * xi;
    }
    return field;
}

Snapshot homogenize(const Snapshot& s, const SpatialGrid& sgrid, const TimeGrid& tgrid) {
    if (s.homogenized) throw std::logic_error("homogenize: snapshot already homogenized");
    if (static_cast<int>(s.field.size()) != sgrid.n_x)
        throw std::invalid_argument("homogenize: field length mismatch");
    Snapshot out = s;
    const auto part = particular_solution(tgrid.times[s.time_index], sgrid);
    for (int j = 0; j < sgrid.n_x; ++j) out.field[j] -= part[j];
    out.homogenized = true;
    return out;
}

Snapshot dehomogenize(const Snapshot& s, const SpatialGrid& sgrid, const TimeGrid& tgrid) {
    if (!s.homogenized) throw std::logic_error("dehomogenize: snapshot is not homogenized");
    if (static_cast<int>(s.field.size()) != sgrid.n_x)
        throw std::invalid_argument("dehomogenize: field length mismatch");
    Snapshot out = s;
    const auto part = particular_solution(tgrid.times[s.time_index], sgrid);
    for (int j = 0; j < sgrid.n_x; ++j) out.field[j] += part[j];
    out.homogenized = false;
    return out;
}

std::vector<Snapshot> FomSource::generate_snapshots(int kappa_index, double kappa,
                                                    const std::vector<int>& time_indices) {
    const Eigen::MatrixXd& traj = trajectory(kappa_index, kappa);
    std::vector<Snapshot> out;
    out.reserve(time_indices.size());
    for (int ti : time_indices) {
        if (ti < 0 || ti >= tgrid().n_t)
            throw std::out_of_range("generate_snapshots: time index out of range");
        Snapshot s;
        s.kappa = kappa;
        s.time_index = ti;
        s.homogenized = false;
        s.field.assign(traj.row(ti).begin(), traj.row(ti).end());
        out.push_back(std::move(s));
    }
    return out;
}

std::string sha256_hex(const void* data, std::size_t len) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int digest_len = 0;
    EVP_Digest(data, len, digest, &digest_len, EVP_sha256(), nullptr);
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(2 * digest_len);
    for (unsigned int i = 0; i < digest_len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

SnapshotCache::SnapshotCache(std::filesystem::path dir, SpatialGrid sgrid, TimeGrid tgrid,
                             BoundaryConditions bc, int substeps)
    : dir_(std::move(dir)),
      sgrid_(std::move(sgrid)),
      tgrid_(std::move(tgrid)),
      bc_(std::move(bc)),
      substeps_(substeps) {
    if (!dir_.empty()) {
        std::filesystem::create_directories(dir_);
        load_manifest();
    }
}

std::filesystem::path SnapshotCache::entry_path(int kappa_index) const {
    return dir_ / ("kappa_" + std::to_string(kappa_index) + ".f64");
}

void SnapshotCache::load_manifest() {
    const auto path = dir_ / "manifest.json";
    if (!std::filesystem::exists(path)) return;
    std::ifstream in(path);
    nlohmann::json j;
    in >> j;
    if (j.value("n_x", -1) != sgrid_.n_x || j.value("n_T", -1) != tgrid_.n_t ||
        j.value("L", -1.0) != sgrid_.length || j.value("substeps", -1) != substeps_) {
        throw CacheError("SnapshotCache: manifest grid parameters do not match configuration");
    }
    for (const auto& e : j.at("entries")) {
        manifest_[e.at("index").get<int>()] = {e.at("kappa").get<double>(),
                                               e.at("sha256").get<std::string>()};
    }
}

void SnapshotCache::store_manifest() {
    nlohmann::json j;
    j["n_x"] = sgrid_.n_x;
    j["n_T"] = tgrid_.n_t;
    j["L"] = sgrid_.length;
    j["substeps"] = substeps_;
    j["entries"] = nlohmann::json::array();
    for (const auto& [idx, entry] : manifest_) {
        j["entries"].push_back({{"index", idx}, {"kappa", entry.first}, {"sha256", entry.second}});
    }
    const auto tmp = dir_ / "manifest.json.tmp";
    {
        std::ofstream out(tmp);
        out << j.dump(2) << "\n";
    }
    std::filesystem::rename(tmp, dir_ / "manifest.json");
}

bool SnapshotCache::has_entry(int kappa_index) const {
    return memory_.count(kappa_index) > 0 || manifest_.count(kappa_index) > 0;
}

const Eigen::MatrixXd& SnapshotCache::trajectory(int kappa_index, double kappa) {
    if (auto it = memory_.find(kappa_index); it != memory_.end()) return it->second;

    if (!dir_.empty()) {
        if (auto it = manifest_.find(kappa_index); it != manifest_.end()) {
            if (it->second.first != kappa)
                throw CacheError("SnapshotCache: kappa mismatch for cached index " +
                                 std::to_string(kappa_index));
            const auto path = entry_path(kappa_index);
            std::ifstream in(path, std::ios::binary);
            if (!in) throw CacheError("SnapshotCache: missing cache file " + path.string());
            std::vector<double> buf(static_cast<std::size_t>(tgrid_.n_t) * sgrid_.n_x);
            in.read(reinterpret_cast<char*>(buf.data()),
                    static_cast<std::streamsize>(buf.size() * sizeof(double)));
            if (in.gcount() != static_cast<std::streamsize>(buf.size() * sizeof(double)))
                throw CacheError("SnapshotCache: truncated cache file " + path.string());
            const std::string h = sha256_hex(buf.data(), buf.size() * sizeof(double));
            if (h != it->second.second)
                throw CacheError("SnapshotCache: content hash mismatch for " + path.string());
            Eigen::MatrixXd traj(tgrid_.n_t, sgrid_.n_x);
            for (int i = 0; i < tgrid_.n_t; ++i)
                for (int j = 0; j < sgrid_.n_x; ++j)
                    traj(i, j) = buf[static_cast<std::size_t>(i) * sgrid_.n_x + j];
            return memory_.emplace(kappa_index, std::move(traj)).first->second;
        }
    }

    Eigen::MatrixXd traj = solve_heat(kappa, sgrid_, tgrid_, bc_, substeps_);
    ++solve_count_;

    if (!dir_.empty()) {
        std::lock_guard<std::mutex> lock(write_mutex_);
        std::vector<double> buf(static_cast<std::size_t>(tgrid_.n_t) * sgrid_.n_x);
        for (int i = 0; i < tgrid_.n_t; ++i)
            for (int j = 0; j < sgrid_.n_x; ++j)
                buf[static_cast<std::size_t>(i) * sgrid_.n_x + j] = traj(i, j);
        const auto path = entry_path(kappa_index);
        const auto tmp = path.string() + ".tmp";
        {
            std::ofstream out(tmp, std::ios::binary);
            out.write(reinterpret_cast<const char*>(buf.data()),
                      static_cast<std::streamsize>(buf.size() * sizeof(double)));
        }
        std::filesystem::rename(tmp, path);
        manifest_[kappa_index] = {kappa, sha256_hex(buf.data(), buf.size() * sizeof(double))};
        store_manifest();
    }
    return memory_.emplace(kappa_index, std::move(traj)).first->second;
}

}  // namespace baypod
