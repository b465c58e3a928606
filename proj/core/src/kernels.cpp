#include "rwl/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include <Eigen/SparseCore>

#include "rwl/csv.hpp"
#include "rwl/errors.hpp"

namespace rwl {

namespace {

using SparseRowMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

void check_dense(const Graph& g) {
  if (g.size() > kDenseLimit)
    throw InvalidArgument("dense kernels are limited to n <= " + std::to_string(kDenseLimit) +
                          " (got n = " + std::to_string(g.size()) + ")");
}

void check_lipschitz(const Graph& g, const Eigen::VectorXd& l) {
  if (static_cast<std::size_t>(l.size()) != g.size())
    throw InvalidArgument("need one Lipschitz constant per node");
  for (Eigen::Index v = 0; v < l.size(); ++v)
    if (!(l[v] > 0.0) || !std::isfinite(l[v]))
      throw InvalidArgument("Lipschitz constants must be finite and positive (node " +
                            std::to_string(v) + ")");
}

void check_lambda(double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw InvalidArgument("lambda must lie in [0, 1]");
}

// A_G = A + I, optionally row-normalised.
SparseRowMatrix adjacency_with_loops(const Graph& g, bool normalise) {
  std::vector<Eigen::Triplet<double>> trips;
  for (NodeId v = 0; v < g.size(); ++v) {
    const auto nb = g.neighbors_unchecked(v);
    const double w = normalise ? 1.0 / static_cast<double>(nb.size() + 1) : 1.0;
    trips.emplace_back(v, v, w);
    for (NodeId u : nb) trips.emplace_back(v, u, w);
  }
  const auto n = static_cast<Eigen::Index>(g.size());
  SparseRowMatrix m(n, n);
  m.setFromTriplets(trips.begin(), trips.end());
  return m;
}

void normalise_rows(Eigen::MatrixXd& m) {
  const Eigen::VectorXd sums = m.rowwise().sum();
  for (Eigen::Index v = 0; v < m.rows(); ++v) m.row(v) /= sums[v];
}

}  // namespace

std::string_view to_string(KernelKind k) {
  switch (k) {
    case KernelKind::unif_mh: return "unif_mh";
    case KernelKind::weight_mh: return "weight_mh";
    case KernelKind::mixed_mh: return "mixed_mh";
    case KernelKind::levy: return "levy";
    case KernelKind::mhlj: return "mhlj";
  }
  return "unif_mh";
}

KernelKind parse_kernel_kind(std::string_view s) {
  if (s == "unif_mh") return KernelKind::unif_mh;
  if (s == "weight_mh") return KernelKind::weight_mh;
  if (s == "mixed_mh") return KernelKind::mixed_mh;
  if (s == "levy") return KernelKind::levy;
  if (s == "mhlj") return KernelKind::mhlj;
  throw InvalidArgument("unknown kernel kind '" + std::string(s) + "'");
}

std::string_view to_string(LevyForm f) { return f == LevyForm::hop_walk ? "hop_walk" : "path_count"; }

LevyForm parse_levy_form(std::string_view s) {
  if (s == "hop_walk") return LevyForm::hop_walk;
  if (s == "path_count") return LevyForm::path_count;
  throw InvalidArgument("unknown levy form '" + std::string(s) + "'");
}

void JumpParams::validate() const {
  if (!(p_jump >= 0.0 && p_jump <= 1.0)) throw InvalidArgument("p_J must lie in [0, 1]");
  if (!(p_distance > 0.0 && p_distance < 1.0)) throw InvalidArgument("p_d must lie in (0, 1)");
  if (horizon < 1) throw InvalidArgument("jump horizon r must be >= 1");
}

std::string TransitionKernel::describe() const {
  std::ostringstream os;
  os << to_string(kind);
  switch (kind) {
    case KernelKind::mixed_mh: os << "(lambda=" << params.lambda << ")"; break;
    case KernelKind::levy:
      os << "(p_d=" << params.jump.p_distance << ";r=" << params.jump.horizon << ")";
      break;
    case KernelKind::mhlj:
      os << "(p_J=" << params.jump.p_jump << ";p_d=" << params.jump.p_distance
         << ";r=" << params.jump.horizon << ")";
      break;
    default: break;
  }
  return os.str();
}

std::vector<double> jump_length_weights(double p_distance, int horizon) {
  JumpParams{0.0, p_distance, horizon}.validate();
  const double q = 1.0 - p_distance;
  const double norm = 1.0 - std::pow(q, horizon);
  std::vector<double> w(static_cast<std::size_t>(horizon));
  double qi = 1.0;
  for (int i = 0; i < horizon; ++i) {
    w[static_cast<std::size_t>(i)] = p_distance * qi / norm;
    qi *= q;
  }
  return w;
}

double expected_jump_length(double p_distance, int horizon) {
  const auto w = jump_length_weights(p_distance, horizon);
  double mean = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) mean += static_cast<double>(i + 1) * w[i];
  return mean;
}

Eigen::VectorXd mixed_target(const Eigen::VectorXd& lipschitz, double lambda) {
  check_lambda(lambda);
  const auto n = static_cast<double>(lipschitz.size());
  return (lambda / n) * Eigen::VectorXd::Ones(lipschitz.size()) +
         ((1.0 - lambda) / lipschitz.sum()) * lipschitz;
}

Eigen::MatrixXd mh_matrix(const Graph& g, const Eigen::VectorXd& target) {
  check_dense(g);
  const auto n = static_cast<Eigen::Index>(g.size());
  if (target.size() != n) throw InvalidArgument("target must have one entry per node");
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
  for (NodeId v = 0; v < g.size(); ++v) {
    const auto nb = g.neighbors_unchecked(v);
    const auto deg_v = static_cast<double>(nb.size());
    double moved = 0.0;
    for (NodeId u : nb) {
      const auto deg_u = static_cast<double>(g.degree_unchecked(u));
      const double accept = std::min(1.0, deg_v * target[u] / (deg_u * target[v]));
      p(v, u) = accept / deg_v;
      moved += p(v, u);
    }
    p(v, v) = std::max(0.0, 1.0 - moved);
  }
  return p;
}

TransitionKernel build_uniform_mh(const Graph& g) {
  TransitionKernel k;
  k.kind = KernelKind::unif_mh;
  const auto n = static_cast<Eigen::Index>(g.size());
  k.target = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  k.matrix = mh_matrix(g, k.target);
  return k;
}

TransitionKernel build_weighted_mh(const Graph& g, const Eigen::VectorXd& lipschitz) {
  check_lipschitz(g, lipschitz);
  TransitionKernel k;
  k.kind = KernelKind::weight_mh;
  k.target = lipschitz / lipschitz.sum();
  k.matrix = mh_matrix(g, lipschitz);
  return k;
}

TransitionKernel build_mixed_mh(const Graph& g, const Eigen::VectorXd& lipschitz, double lambda) {
  check_lipschitz(g, lipschitz);
  check_lambda(lambda);
  TransitionKernel k;
  k.kind = KernelKind::mixed_mh;
  k.params.lambda = lambda;
  k.target = mixed_target(lipschitz, lambda);
  k.matrix = mh_matrix(g, k.target);
  return k;
}

TransitionKernel build_levy_matrix(const Graph& g, double p_distance, int horizon, LevyForm form) {
  check_dense(g);
  const auto weights = jump_length_weights(p_distance, horizon);
  const auto n = static_cast<Eigen::Index>(g.size());

  TransitionKernel k;
  k.kind = KernelKind::levy;
  k.params.jump = JumpParams{0.0, p_distance, horizon};
  k.params.levy_form = form;
  k.matrix = Eigen::MatrixXd::Zero(n, n);

  // power holds the row-normalised i-th term. For path_count, row scaling
  // commutes with right-multiplication, so renormalising each step equals
  // normalising A_G^i itself while keeping entries bounded.
  const SparseRowMatrix step = adjacency_with_loops(g, form == LevyForm::hop_walk);
  Eigen::MatrixXd power = Eigen::MatrixXd::Identity(n, n);
  for (int i = 0; i < horizon; ++i) {
    power = power * step;
    if (form == LevyForm::path_count) normalise_rows(power);
    k.matrix += weights[static_cast<std::size_t>(i)] * power;
  }
  return k;
}

TransitionKernel build_mhlj_matrix(const Graph& g, const Eigen::VectorXd& lipschitz,
                                   const JumpParams& jump, LevyForm form) {
  jump.validate();
  TransitionKernel is = build_weighted_mh(g, lipschitz);
  TransitionKernel levy = build_levy_matrix(g, jump.p_distance, jump.horizon, form);
  TransitionKernel k;
  k.kind = KernelKind::mhlj;
  k.params.jump = jump;
  k.params.levy_form = form;
  k.matrix = (1.0 - jump.p_jump) * is.matrix + jump.p_jump * levy.matrix;
  return k;
}

MhSampler::MhSampler(const Graph& g, Eigen::VectorXd target) : graph_(&g), target_(std::move(target)) {
  if (static_cast<std::size_t>(target_.size()) != g.size())
    throw InvalidArgument("sampler target must have one entry per node");
  for (Eigen::Index v = 0; v < target_.size(); ++v)
    if (!(target_[v] > 0.0)) throw InvalidArgument("sampler target must be positive");
}

MhSampler MhSampler::uniform(const Graph& g) {
  return MhSampler(g, Eigen::VectorXd::Ones(static_cast<Eigen::Index>(g.size())));
}

MhSampler MhSampler::weighted(const Graph& g, const Eigen::VectorXd& lipschitz) {
  check_lipschitz(g, lipschitz);
  return MhSampler(g, lipschitz);
}

MhSampler MhSampler::mixed(const Graph& g, const Eigen::VectorXd& lipschitz, double lambda) {
  check_lipschitz(g, lipschitz);
  return MhSampler(g, mixed_target(lipschitz, lambda));
}

NodeId MhSampler::step(NodeId v, Rng& rng) const {
  const auto nb = graph_->neighbors_unchecked(v);
  if (nb.empty()) return v;
  const NodeId u = nb[rng.below(nb.size())];
  const double ratio = static_cast<double>(nb.size()) * target_[u] /
                       (static_cast<double>(graph_->degree_unchecked(u)) * target_[v]);
  if (ratio >= 1.0 || rng.uniform() < ratio) return u;
  return v;
}

LevySampler::LevySampler(const Graph& g, double p_distance, int horizon) : graph_(&g) {
  const auto w = jump_length_weights(p_distance, horizon);
  cdf_.resize(w.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) cdf_[i] = (acc += w[i]);
  cdf_.back() = 1.0;
}

int LevySampler::sample_length(Rng& rng) const {
  const double u = rng.uniform();
  const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  const auto last = static_cast<std::ptrdiff_t>(cdf_.size()) - 1;
  return static_cast<int>(std::min<std::ptrdiff_t>(it - cdf_.begin(), last)) + 1;
}

NodeId LevySampler::hop(NodeId v, Rng& rng) const {
  const auto nb = graph_->neighbors_unchecked(v);
  const auto pick = rng.below(nb.size() + 1);
  return pick == nb.size() ? v : nb[pick];
}

JumpOutcome LevySampler::jump(NodeId v, Rng& rng) const {
  const int hops = sample_length(rng);
  for (int i = 0; i < hops; ++i) v = hop(v, rng);
  return {v, hops};
}

NodeId sample_step_mh(const Graph& g, const Eigen::VectorXd& target, NodeId v, Rng& rng) {
  if (v >= g.size()) throw InvalidArgument("node out of range");
  return MhSampler(g, target).step(v, rng);
}

JumpOutcome sample_levy_jump(const Graph& g, double p_distance, int horizon, NodeId v, Rng& rng) {
  if (v >= g.size()) throw InvalidArgument("node out of range");
  return LevySampler(g, p_distance, horizon).jump(v, rng);
}

double row_sum_error(const Eigen::MatrixXd& p) {
  return (p.rowwise().sum().array() - 1.0).abs().maxCoeff();
}

void write_kernel(const TransitionKernel& k, std::ostream& out) {
  out << "# rwl-kernel v1\n";
  out << "# kind=" << to_string(k.kind) << " n=" << k.size()
      << " lambda=" << format_double(k.params.lambda)
      << " p_J=" << format_double(k.params.jump.p_jump)
      << " p_d=" << format_double(k.params.jump.p_distance) << " r=" << k.params.jump.horizon
      << " levy_form=" << to_string(k.params.levy_form) << '\n';
  for (Eigen::Index i = 0; i < k.matrix.rows(); ++i) {
    for (Eigen::Index j = 0; j < k.matrix.cols(); ++j)
      out << (j ? " " : "") << format_double(k.matrix(i, j));
    out << '\n';
  }
}

TransitionKernel read_kernel(std::istream& in) {
  TransitionKernel k;
  std::map<std::string, std::string> fields;
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream ls(line.substr(1));
      std::string tok;
      while (ls >> tok)
        if (auto eq = tok.find('='); eq != std::string::npos)
          fields[tok.substr(0, eq)] = tok.substr(eq + 1);
      continue;
    }
    std::istringstream ls(line);
    std::vector<double> row;
    std::string tok;
    while (ls >> tok) row.push_back(parse_double(tok));
    rows.push_back(std::move(row));
  }
  const auto n = static_cast<Eigen::Index>(rows.size());
  if (n == 0) throw InvalidArgument("kernel file has no rows");
  k.matrix.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (static_cast<Eigen::Index>(rows[i].size()) != n)
      throw InvalidArgument("kernel file row " + std::to_string(i) + " is not length " +
                            std::to_string(n));
    for (Eigen::Index j = 0; j < n; ++j) k.matrix(i, j) = rows[i][j];
  }
  if (fields.contains("kind")) k.kind = parse_kernel_kind(fields["kind"]);
  if (fields.contains("lambda")) k.params.lambda = parse_double(fields["lambda"]);
  if (fields.contains("p_J")) k.params.jump.p_jump = parse_double(fields["p_J"]);
  if (fields.contains("p_d")) k.params.jump.p_distance = parse_double(fields["p_d"]);
  if (fields.contains("r")) k.params.jump.horizon = std::stoi(fields["r"]);
  if (fields.contains("levy_form")) k.params.levy_form = parse_levy_form(fields["levy_form"]);
  if ((k.matrix.array() < 0.0).any() || row_sum_error(k.matrix) > 1e-9)
    throw InvalidArgument("kernel file is not a row-stochastic matrix");
  return k;
}

}  // namespace rwl
