#include "thermopinn/fdm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "thermopinn/collocation.hpp"
#include "thermopinn/util.hpp"

namespace thermopinn {

namespace {

struct Mesh {
  std::vector<double> x;
  std::array<std::size_t, kLayerCount> start{};  // first node per layer
  std::array<double, kLayerCount> dx{};
  std::size_t last = 0;
};

Mesh make_mesh(const EnvironmentConfig& env) {
  Mesh m;
  for (int li = 0; li < kLayerCount; ++li) {
    const std::vector<double> nodes = layer_nodes_m(env, static_cast<Layer>(li));
    m.start[li] = m.x.empty() ? 0 : m.x.size() - 1;  // share the interface node
    m.dx[li] = env.layer(static_cast<Layer>(li)).thickness / env.segments[li];
    if (m.x.empty()) {
      m.x = nodes;
    } else {
      m.x.insert(m.x.end(), nodes.begin() + 1, nodes.end());
    }
  }
  m.last = m.x.size() - 1;
  return m;
}

// Per-node volumetric heat capacity times cell width (J/(m^2 K)).
std::vector<double> cell_masses(const EnvironmentConfig& env, const Mesh& m) {
  std::vector<double> mass(m.x.size(), 0.0);
  for (int li = 0; li < kLayerCount; ++li) {
    const double half = env.layer(static_cast<Layer>(li)).volumetric_heat_capacity() * m.dx[li] / 2;
    const std::size_t lo = m.start[li];
    const std::size_t hi = li + 1 < kLayerCount ? m.start[li + 1] : m.last;
    for (std::size_t i = lo; i < hi; ++i) {
      mass[i] += half;
      mass[i + 1] += half;
    }
  }
  return mass;
}

}  // namespace

double fdm_max_stable_dt(const EnvironmentConfig& env) {
  env.validate();
  const Mesh m = make_mesh(env);
  double dt_max = std::numeric_limits<double>::infinity();
  std::array<double, kLayerCount> cap{}, cond{};
  for (int li = 0; li < kLayerCount; ++li) {
    cap[li] = env.layer(static_cast<Layer>(li)).volumetric_heat_capacity();
    cond[li] = env.layer(static_cast<Layer>(li)).conductivity;
    // interior nodes: r = k dt / (C dx^2) <= 1/2
    dt_max = std::min(dt_max, cap[li] * m.dx[li] * m.dx[li] / (2.0 * cond[li]));
  }
  // half cells at the outer faces
  dt_max = std::min(dt_max, (cap[0] * m.dx[0] / 2) / (cond[0] / m.dx[0] + env.h_gas));
  dt_max = std::min(dt_max, (cap[2] * m.dx[2] / 2) / (cond[2] / m.dx[2] + env.h_air));
  // interface cells
  for (int li = 0; li + 1 < kLayerCount; ++li) {
    const double d = (cap[li] * m.dx[li] + cap[li + 1] * m.dx[li + 1]) / 2;
    dt_max = std::min(dt_max, d / (cond[li] / m.dx[li] + cond[li + 1] / m.dx[li + 1]));
  }
  return dt_max;
}

long stable_fdm_steps(const EnvironmentConfig& env, long requested, int n_snapshots) {
  if (n_snapshots < 2) throw std::invalid_argument("need at least 2 snapshots");
  const long intervals = n_snapshots - 1;
  const double dt_max = fdm_max_stable_dt(env);
  long steps = std::max(requested, static_cast<long>(std::ceil(env.horizon / dt_max)));
  const long rem = steps % intervals;
  if (rem != 0) steps += intervals - rem;
  return steps;
}

FdmResult solve_fdm(const EnvironmentConfig& env, long n_steps, int n_snapshots) {
  env.validate();
  if (n_snapshots < 2) throw std::invalid_argument("need at least 2 snapshots");
  if (n_steps < 1) throw std::invalid_argument("need at least 1 step");
  if (n_steps % (n_snapshots - 1) != 0) {
    throw std::domain_error("step count " + std::to_string(n_steps) +
                            " is not a multiple of the " + std::to_string(n_snapshots - 1) +
                            " snapshot intervals");
  }
  const Mesh mesh = make_mesh(env);
  const std::size_t n = mesh.x.size();
  const double dt = env.horizon / static_cast<double>(n_steps);
  const double dt_max = fdm_max_stable_dt(env);
  if (dt > dt_max * (1.0 + 1e-12)) {
    throw std::domain_error(
        "unstable step: dt = " + format_double(dt) + " s exceeds " + format_double(dt_max) +
        " s; need at least " + std::to_string(static_cast<long>(std::ceil(env.horizon / dt_max))) +
        " steps");
  }

  FdmResult out;
  out.x = mesh.x;
  out.t = grid_times(env);
  // Snapshot instants must be a subset of the native time levels; reuse the
  // canonical grid times when the counts line up, else label by stride.
  if (n_snapshots != env.segments[3] + 1) {
    out.t.resize(n_snapshots);
    for (int s = 0; s < n_snapshots; ++s) {
      out.t[s] = s == 0 ? 0.0
                        : (s == n_snapshots - 1
                               ? env.horizon
                               : env.horizon * (static_cast<double>(s) / (n_snapshots - 1)));
    }
  }
  out.dt = dt;
  out.steps = n_steps;
  out.layer_start = mesh.start;
  for (int li = 0; li < kLayerCount; ++li) {
    const FabricLayer& f = env.layer(static_cast<Layer>(li));
    out.fourier[li] =
        f.conductivity * dt / (f.volumetric_heat_capacity() * mesh.dx[li] * mesh.dx[li]);
  }

  // Conduction exchange coefficients: T'[i] = T[i] + cl[i]*(T[i-1]-T[i]) +
  // cr[i]*(T[i+1]-T[i]) plus the Robin injections at the two ends.
  std::vector<double> cl(n, 0.0), cr(n, 0.0);
  std::array<double, kLayerCount> cap{}, cond{};
  for (int li = 0; li < kLayerCount; ++li) {
    cap[li] = env.layer(static_cast<Layer>(li)).volumetric_heat_capacity();
    cond[li] = env.layer(static_cast<Layer>(li)).conductivity;
  }
  for (int li = 0; li < kLayerCount; ++li) {
    const std::size_t lo = mesh.start[li];
    const std::size_t hi = li + 1 < kLayerCount ? mesh.start[li + 1] : mesh.last;
    const double r = cond[li] * dt / (cap[li] * mesh.dx[li] * mesh.dx[li]);
    for (std::size_t i = lo + 1; i < hi; ++i) {
      cl[i] = r;
      cr[i] = r;
    }
  }
  for (int li = 0; li + 1 < kLayerCount; ++li) {
    const std::size_t i = mesh.start[li + 1];
    const double d = (cap[li] * mesh.dx[li] + cap[li + 1] * mesh.dx[li + 1]) / 2;
    cl[i] = dt * cond[li] / (mesh.dx[li] * d);
    cr[i] = dt * cond[li + 1] / (mesh.dx[li + 1] * d);
  }
  const double d_gas = cap[0] * mesh.dx[0] / 2;
  const double d_air = cap[2] * mesh.dx[2] / 2;
  cr[0] = dt * cond[0] / (mesh.dx[0] * d_gas);
  const double g_gas = dt * env.h_gas / d_gas;
  cl[mesh.last] = dt * cond[2] / (mesh.dx[2] * d_air);
  const double g_air = dt * env.h_air / d_air;

  std::vector<double> T(n, env.T0), Tn(n, 0.0);
  out.T.assign(static_cast<std::size_t>(n_snapshots) * n, 0.0);
  out.flux_in.reserve(n_steps + 1);
  out.flux_out.reserve(n_steps + 1);
  std::copy(T.begin(), T.end(), out.T.begin());

  const long stride = n_steps / (n_snapshots - 1);
  long next_row = 1;
  for (long step = 0; step < n_steps; ++step) {
    out.flux_in.push_back(env.h_gas * (env.Tg - T[0]));
    out.flux_out.push_back(env.h_air * (T[mesh.last] - env.T0));
    Tn[0] = T[0] + cr[0] * (T[1] - T[0]) + g_gas * (env.Tg - T[0]);
    for (std::size_t i = 1; i < mesh.last; ++i) {
      Tn[i] = T[i] + cl[i] * (T[i - 1] - T[i]) + cr[i] * (T[i + 1] - T[i]);
    }
    Tn[mesh.last] = T[mesh.last] + cl[mesh.last] * (T[mesh.last - 1] - T[mesh.last]) +
                    g_air * (env.T0 - T[mesh.last]);
    T.swap(Tn);
    if ((step + 1) % stride == 0) {
      std::copy(T.begin(), T.end(), out.T.begin() + static_cast<std::size_t>(next_row) * n);
      ++next_row;
    }
  }
  out.flux_in.push_back(env.h_gas * (env.Tg - T[0]));
  out.flux_out.push_back(env.h_air * (T[mesh.last] - env.T0));
  return out;
}

std::vector<double> steady_state_profile(const EnvironmentConfig& env,
                                         const std::vector<double>& x_nodes, double* q_out) {
  env.validate();
  double resistance = 1.0 / env.h_gas + 1.0 / env.h_air;
  for (int li = 0; li < kLayerCount; ++li) {
    resistance += env.layers[li].thickness / env.layers[li].conductivity;
  }
  const double q = (env.Tg - env.T0) / resistance;
  if (q_out) *q_out = q;
  const double t_surface = env.Tg - q / env.h_gas;
  const double slack = 1e-12 * env.total_thickness();

  std::vector<double> out;
  out.reserve(x_nodes.size());
  for (double x : x_nodes) {
    if (x < -slack || x > env.total_thickness() + slack) {
      throw std::out_of_range("steady profile queried outside the slab: x = " + format_double(x));
    }
    double r_here = 0;
    for (int li = 0; li < kLayerCount; ++li) {
      const Layer layer = static_cast<Layer>(li);
      if (x <= env.x_right(layer) + slack || li == kLayerCount - 1) {
        r_here += (std::max(x, env.x_left(layer)) - env.x_left(layer)) /
                  env.layer(layer).conductivity;
        break;
      }
      r_here += env.layer(layer).thickness / env.layer(layer).conductivity;
    }
    out.push_back(t_surface - q * r_here);
  }
  return out;
}

double energy_balance_residual(const FdmResult& f, const EnvironmentConfig& env) {
  if (f.flux_in.size() != static_cast<std::size_t>(f.steps) + 1 ||
      f.flux_out.size() != f.flux_in.size()) {
    throw std::runtime_error("energy audit needs the native flux traces of a fresh solve");
  }
  const Mesh mesh = make_mesh(env);
  if (mesh.x.size() != f.nx()) throw std::invalid_argument("field does not match environment");
  const std::vector<double> mass = cell_masses(env, mesh);
  double h_first = 0, h_last = 0;
  const std::size_t last_row = f.nt() - 1;
  for (std::size_t i = 0; i < f.nx(); ++i) {
    h_first += mass[i] * f.at(0, i);
    h_last += mass[i] * f.at(last_row, i);
  }
  double integral = 0;
  for (std::size_t s = 0; s < f.flux_in.size(); ++s) {
    const double w = (s == 0 || s + 1 == f.flux_in.size()) ? 0.5 : 1.0;
    integral += w * (f.flux_in[s] - f.flux_out[s]);
  }
  integral *= f.dt;
  const double dh = h_last - h_first;
  const double denom = std::max(std::abs(dh), std::abs(integral));
  return denom > 0 ? std::abs(dh - integral) / denom : 0.0;
}

void save_field(const std::string& path, const FdmResult& f) {
  std::ostringstream out;
  out << "thermopinn-field v1\n";
  out << "nx " << f.nx() << " nt " << f.nt() << "\n";
  out << "dt " << format_double(f.dt) << " steps " << f.steps << "\n";
  out << "layer_start " << f.layer_start[0] << " " << f.layer_start[1] << " " << f.layer_start[2]
      << "\n";
  out << "fourier " << format_double(f.fourier[0]) << " " << format_double(f.fourier[1]) << " "
      << format_double(f.fourier[2]) << "\n";
  out << "x\n";
  for (double v : f.x) out << format_double(v) << "\n";
  out << "t\n";
  for (double v : f.t) out << format_double(v) << "\n";
  out << "T\n";
  for (std::size_t ti = 0; ti < f.nt(); ++ti) {
    for (std::size_t xi = 0; xi < f.nx(); ++xi) {
      out << (xi ? " " : "") << format_double(f.at(ti, xi));
    }
    out << "\n";
  }
  write_text_file(path, out.str());
}

FdmResult load_field(const std::string& path) {
  std::istringstream in(read_text_file(path));
  std::string line;
  auto next_line = [&]() {
    if (!std::getline(in, line)) throw std::runtime_error("truncated field file: " + path);
    return line;
  };
  if (next_line() != "thermopinn-field v1") throw std::runtime_error("not a field file: " + path);
  FdmResult f;
  std::vector<std::string> w = split_ws(next_line());
  if (w.size() != 4 || w[0] != "nx" || w[2] != "nt") throw std::runtime_error("bad field header");
  const std::size_t nx = static_cast<std::size_t>(parse_long(w[1]));
  const std::size_t nt = static_cast<std::size_t>(parse_long(w[3]));
  w = split_ws(next_line());
  if (w.size() != 4 || w[0] != "dt" || w[2] != "steps") throw std::runtime_error("bad field header");
  f.dt = parse_double(w[1]);
  f.steps = parse_long(w[3]);
  w = split_ws(next_line());
  if (w.size() != 4 || w[0] != "layer_start") throw std::runtime_error("bad field header");
  for (int i = 0; i < 3; ++i) f.layer_start[i] = static_cast<std::size_t>(parse_long(w[i + 1]));
  w = split_ws(next_line());
  if (w.size() != 4 || w[0] != "fourier") throw std::runtime_error("bad field header");
  for (int i = 0; i < 3; ++i) f.fourier[i] = parse_double(w[i + 1]);
  if (next_line() != "x") throw std::runtime_error("bad field file: missing x section");
  f.x.resize(nx);
  for (double& v : f.x) v = parse_double(next_line());
  if (next_line() != "t") throw std::runtime_error("bad field file: missing t section");
  f.t.resize(nt);
  for (double& v : f.t) v = parse_double(next_line());
  if (next_line() != "T") throw std::runtime_error("bad field file: missing T section");
  f.T.resize(nx * nt);
  for (std::size_t ti = 0; ti < nt; ++ti) {
    w = split_ws(next_line());
    if (w.size() != nx) throw std::runtime_error("bad field row length");
    for (std::size_t xi = 0; xi < nx; ++xi) f.T[ti * nx + xi] = parse_double(w[xi]);
  }
  return f;
}

void save_field_csv(const std::string& path, const FdmResult& f) {
  std::ostringstream out;
  out << "t,x_mm,layer,T_K\n";
  for (std::size_t ti = 0; ti < f.nt(); ++ti) {
    const std::string t = format_double(f.t[ti]);
    for (int li = 0; li < kLayerCount; ++li) {
      const std::size_t first = f.layer_start[li];
      const std::size_t last = li + 1 < kLayerCount ? f.layer_start[li + 1] : f.nx() - 1;
      for (std::size_t xi = first; xi <= last; ++xi) {
        out << t << "," << format_double(f.x[xi] * 1e3) << ","
            << layer_name(static_cast<Layer>(li)) << "," << format_double(f.at(ti, xi)) << "\n";
      }
    }
  }
  write_text_file(path, out.str());
}

namespace {

constexpr char kFieldMagic[8] = {'T', 'P', 'N', 'F', 'L', 'D', '1', '\0'};

void write_raw(std::ostream& out, const void* p, std::size_t bytes) {
  out.write(static_cast<const char*>(p), static_cast<std::streamsize>(bytes));
}

void read_raw(std::istream& in, void* p, std::size_t bytes, const std::string& path) {
  in.read(static_cast<char*>(p), static_cast<std::streamsize>(bytes));
  if (static_cast<std::size_t>(in.gcount()) != bytes) {
    throw std::runtime_error("truncated field file: " + path);
  }
}

}  // namespace

void save_field_binary(const std::string& path, const FdmResult& f) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  write_raw(out, kFieldMagic, sizeof(kFieldMagic));
  const std::uint64_t nx = f.nx(), nt = f.nt();
  const std::int64_t steps = f.steps;
  write_raw(out, &nx, sizeof(nx));
  write_raw(out, &nt, sizeof(nt));
  write_raw(out, &steps, sizeof(steps));
  write_raw(out, &f.dt, sizeof(f.dt));
  for (std::size_t s : f.layer_start) {
    const std::uint64_t v = s;
    write_raw(out, &v, sizeof(v));
  }
  write_raw(out, f.fourier.data(), sizeof(double) * f.fourier.size());
  write_raw(out, f.x.data(), sizeof(double) * f.x.size());
  write_raw(out, f.t.data(), sizeof(double) * f.t.size());
  write_raw(out, f.T.data(), sizeof(double) * f.T.size());
  if (!out) throw std::runtime_error("short write: " + path);
}

FdmResult load_field_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  char magic[8];
  read_raw(in, magic, sizeof(magic), path);
  if (std::memcmp(magic, kFieldMagic, sizeof(magic)) != 0) {
    throw std::runtime_error("not a binary field file: " + path);
  }
  FdmResult f;
  std::uint64_t nx = 0, nt = 0;
  std::int64_t steps = 0;
  read_raw(in, &nx, sizeof(nx), path);
  read_raw(in, &nt, sizeof(nt), path);
  read_raw(in, &steps, sizeof(steps), path);
  read_raw(in, &f.dt, sizeof(f.dt), path);
  if (nx == 0 || nt == 0 || nx > (1ull << 28) || nt > (1ull << 28) ||
      nx * nt > (1ull << 28)) {
    throw std::runtime_error("implausible field dimensions in " + path);
  }
  f.steps = steps;
  for (std::size_t& s : f.layer_start) {
    std::uint64_t v = 0;
    read_raw(in, &v, sizeof(v), path);
    if (v >= nx) throw std::runtime_error("bad layer index in " + path);
    s = static_cast<std::size_t>(v);
  }
  read_raw(in, f.fourier.data(), sizeof(double) * f.fourier.size(), path);
  f.x.resize(nx);
  f.t.resize(nt);
  f.T.resize(nx * nt);
  read_raw(in, f.x.data(), sizeof(double) * nx, path);
  read_raw(in, f.t.data(), sizeof(double) * nt, path);
  read_raw(in, f.T.data(), sizeof(double) * nx * nt, path);
  return f;
}

}  // namespace thermopinn
