#include "rwl/data.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>

#include "rwl/csv.hpp"
#include "rwl/errors.hpp"
#include "rwl/rng.hpp"

namespace rwl {

namespace {

double softplus(double a) { return a > 0 ? a + std::log1p(std::exp(-a)) : std::log1p(std::exp(a)); }
double sigmoid(double a) {
  if (a >= 0) return 1.0 / (1.0 + std::exp(-a));
  const double e = std::exp(a);
  return e / (1.0 + e);
}

void check_node(const ProblemInstance& inst, NodeId v) {
  if (v >= inst.size())
    throw InvalidArgument("node " + std::to_string(v) + " out of range (n = " +
                          std::to_string(inst.size()) + ")");
}

void check_dim(const ProblemInstance& inst, const Eigen::VectorXd& x) {
  if (static_cast<std::size_t>(x.size()) != inst.dim())
    throw InvalidArgument("model has dimension " + std::to_string(x.size()) + ", expected " +
                          std::to_string(inst.dim()));
}

Eigen::VectorXd draw_true_model(std::size_t d, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::VectorXd x(d);
  for (std::size_t i = 0; i < d; ++i) x[i] = rng.normal();
  return x;
}

// Features, responses and class flags for the given per-node variances.
ProblemInstance sample_nodes(Graph graph, const DataParams& params, Rng& rng,
                             std::vector<bool> high) {
  const std::size_t n = graph.size();
  const std::size_t d = params.dim;
  const Eigen::VectorXd truth = draw_true_model(d, params.model_seed);
  Eigen::MatrixXd a(n, d);
  Eigen::VectorXd y(n);
  for (std::size_t v = 0; v < n; ++v) {
    const double var = params.heterogeneous
                           ? (high[v] ? params.sigma_high_sq : params.sigma_low_sq)
                           : params.sigma_sq;
    const double sd = std::sqrt(var);
    do {
      for (std::size_t i = 0; i < d; ++i) a(v, i) = sd * rng.normal();
    } while (a.row(v).squaredNorm() == 0.0);
    const double margin = a.row(v).dot(truth);
    if (params.loss == LossModel::linear_regression)
      y[v] = margin + params.noise_std * rng.normal();
    else
      y[v] = rng.bernoulli(sigmoid(margin)) ? 1.0 : 0.0;
  }
  return ProblemInstance(std::move(graph), std::move(a), std::move(y), params.loss,
                         std::move(high), truth, params);
}

void validate_common(const Graph& g, const DataParams& p) {
  if (g.size() == 0) throw InvalidArgument("instance needs n >= 1");
  if (p.dim == 0) throw InvalidArgument("instance needs d >= 1");
  if (!(p.noise_std >= 0.0)) throw InvalidArgument("noise_std must be >= 0");
}

}  // namespace

std::string_view to_string(LossModel m) {
  return m == LossModel::linear_regression ? "linear_regression" : "logistic_regression";
}

LossModel parse_loss_model(std::string_view s) {
  if (s == "linear_regression" || s == "linear") return LossModel::linear_regression;
  if (s == "logistic_regression" || s == "logistic") return LossModel::logistic_regression;
  throw InvalidArgument("unknown loss model '" + std::string(s) + "'");
}

std::string_view to_string(Placement p) {
  return p == Placement::bernoulli ? "bernoulli" : "fixed_count";
}

Placement parse_placement(std::string_view s) {
  if (s == "bernoulli") return Placement::bernoulli;
  if (s == "fixed_count") return Placement::fixed_count;
  throw InvalidArgument("unknown placement '" + std::string(s) + "'");
}

ProblemInstance::ProblemInstance(Graph graph, Eigen::MatrixXd features, Eigen::VectorXd responses,
                                 LossModel loss, std::vector<bool> high_variance,
                                 Eigen::VectorXd true_model, DataParams params)
    : graph_(std::move(graph)),
      features_(std::move(features)),
      responses_(std::move(responses)),
      loss_(loss),
      high_variance_(std::move(high_variance)),
      true_model_(std::move(true_model)),
      params_(params) {
  const auto n = static_cast<Eigen::Index>(graph_.size());
  if (features_.rows() != n || responses_.size() != n)
    throw InvalidArgument("instance data must have one row per node");
  if (features_.cols() == 0) throw InvalidArgument("instance needs d >= 1");
  if (!high_variance_.empty() && high_variance_.size() != graph_.size())
    throw InvalidArgument("variance class vector must have one entry per node");
  if (high_variance_.empty()) high_variance_.assign(graph_.size(), false);
  if (true_model_.size() != 0 && true_model_.size() != features_.cols())
    throw InvalidArgument("true model dimension mismatch");
  if (!features_.allFinite() || !responses_.allFinite())
    throw InvalidArgument("instance data must be finite");
  params_.dim = static_cast<std::size_t>(features_.cols());
  params_.loss = loss_;

  const double scale = loss_ == LossModel::linear_regression ? 2.0 : 0.25;
  lipschitz_ = scale * features_.rowwise().squaredNorm();
  for (Eigen::Index v = 0; v < n; ++v)
    if (!(lipschitz_[v] > 0.0))
      throw InvalidArgument("feature row " + std::to_string(v) + " has zero norm");
  l_mean_ = lipschitz_.mean();
  l_min_ = lipschitz_.minCoeff();
  l_max_ = lipschitz_.maxCoeff();

  sigma_star_sq_ = std::numeric_limits<double>::quiet_NaN();
  sigma_max_sq_ = std::numeric_limits<double>::quiet_NaN();
  if (loss_ == LossModel::linear_regression) {
    x_star_ = solve_optimum(features_, responses_);
    double sum = 0.0, mx = 0.0;
    for (Eigen::Index v = 0; v < n; ++v) {
      const double resid = responses_[v] - features_.row(v).dot(*x_star_);
      const double g2 = 4.0 * resid * resid * features_.row(v).squaredNorm();
      sum += g2;
      mx = std::max(mx, g2);
    }
    sigma_star_sq_ = sum / static_cast<double>(n);
    sigma_max_sq_ = mx;
  }
}

const Eigen::VectorXd& ProblemInstance::optimum() const {
  if (!x_star_) throw Unsupported("closed-form optimum is only available for linear regression");
  return *x_star_;
}

std::size_t ProblemInstance::high_count() const {
  return static_cast<std::size_t>(std::count(high_variance_.begin(), high_variance_.end(), true));
}

ProblemInstance gen_homogeneous(Graph graph, DataParams params) {
  validate_common(graph, params);
  if (!(params.sigma_sq > 0.0)) throw InvalidArgument("sigma_sq must be > 0");
  params.heterogeneous = false;
  Rng rng(params.data_seed);
  std::vector<bool> high(graph.size(), false);
  return sample_nodes(std::move(graph), params, rng, std::move(high));
}

ProblemInstance gen_heterogeneous(Graph graph, DataParams params) {
  validate_common(graph, params);
  if (!(params.p_high > 0.0 && params.p_high < 1.0))
    throw InvalidArgument("p_high must lie in (0, 1)");
  if (!(params.sigma_low_sq > 0.0 && params.sigma_high_sq > params.sigma_low_sq))
    throw InvalidArgument("need sigma_high_sq > sigma_low_sq > 0");
  params.heterogeneous = true;

  const std::size_t n = graph.size();
  Rng rng(params.data_seed);
  std::vector<bool> high(n, false);
  if (params.placement == Placement::bernoulli) {
    for (std::size_t v = 0; v < n; ++v) high[v] = rng.bernoulli(params.p_high);
  } else {
    const auto count = static_cast<std::size_t>(std::llround(params.p_high * static_cast<double>(n)));
    if (count == 0)
      throw InvalidArgument("fixed_count placement selects round(p_high * n) = 0 high-variance nodes");
    // Partial Fisher-Yates: the first `count` entries are a uniform subset.
    std::vector<NodeId> order(n);
    std::iota(order.begin(), order.end(), NodeId{0});
    for (std::size_t i = 0; i < count; ++i) {
      const auto j = i + static_cast<std::size_t>(rng.below(n - i));
      std::swap(order[i], order[j]);
      high[order[i]] = true;
    }
  }
  return sample_nodes(std::move(graph), params, rng, std::move(high));
}

ProblemInstance generate_instance(Graph graph, const DataParams& params) {
  return params.heterogeneous ? gen_heterogeneous(std::move(graph), params)
                              : gen_homogeneous(std::move(graph), params);
}

Eigen::VectorXd local_grad(const ProblemInstance& inst, NodeId v, const Eigen::VectorXd& x) {
  check_node(inst, v);
  check_dim(inst, x);
  const auto a = inst.features().row(v).transpose();
  const double margin = a.dot(x);
  const double y = inst.responses()[v];
  if (inst.loss() == LossModel::linear_regression) return -2.0 * (y - margin) * a;
  return (sigmoid(margin) - y) * a;
}

double local_loss(const ProblemInstance& inst, NodeId v, const Eigen::VectorXd& x) {
  check_node(inst, v);
  check_dim(inst, x);
  const double margin = inst.features().row(v).dot(x);
  const double y = inst.responses()[v];
  if (inst.loss() == LossModel::linear_regression) return (y - margin) * (y - margin);
  return softplus(margin) - y * margin;
}

double global_loss(const ProblemInstance& inst, const Eigen::VectorXd& x) {
  check_dim(inst, x);
  double sum = 0.0;
  for (NodeId v = 0; v < inst.size(); ++v) sum += local_loss(inst, v, x);
  return sum / static_cast<double>(inst.size());
}

Eigen::VectorXd global_grad(const ProblemInstance& inst, const Eigen::VectorXd& x) {
  check_dim(inst, x);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(x.size());
  for (NodeId v = 0; v < inst.size(); ++v) g += local_grad(inst, v, x);
  return g / static_cast<double>(inst.size());
}

Eigen::VectorXd solve_optimum(const Eigen::MatrixXd& features, const Eigen::VectorXd& responses) {
  const Eigen::Index d = features.cols();
  Eigen::MatrixXd gram = features.transpose() * features;
  const Eigen::VectorXd rhs = features.transpose() * responses;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
  const bool singular = ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
                        ldlt.rcond() < 1e-13;
  if (singular) {
    const double ridge = 1e-10 * gram.trace() / static_cast<double>(d);
    gram.diagonal().array() += ridge;
    ldlt.compute(gram);
    if (ldlt.info() != Eigen::Success) throw NumericFailure("normal equations could not be solved");
  }
  return ldlt.solve(rhs);
}

Eigen::VectorXd solve_optimum(const ProblemInstance& inst) {
  if (inst.loss() != LossModel::linear_regression)
    throw Unsupported("closed-form optimum is only available for linear regression");
  return solve_optimum(inst.features(), inst.responses());
}

void write_instance(const ProblemInstance& inst, std::ostream& out) {
  const auto& p = inst.params();
  out << "# rwl-instance v1\n";
  out << "n " << inst.size() << '\n';
  out << "d " << inst.dim() << '\n';
  out << "loss " << to_string(inst.loss()) << '\n';
  out << "heterogeneous " << (p.heterogeneous ? 1 : 0) << '\n';
  out << "sigma_sq " << format_double(p.sigma_sq) << '\n';
  out << "sigma_low_sq " << format_double(p.sigma_low_sq) << '\n';
  out << "sigma_high_sq " << format_double(p.sigma_high_sq) << '\n';
  out << "p_high " << format_double(p.p_high) << '\n';
  out << "placement " << to_string(p.placement) << '\n';
  out << "noise_std " << format_double(p.noise_std) << '\n';
  out << "model_seed " << p.model_seed << '\n';
  out << "data_seed " << p.data_seed << '\n';
  out << "topology " << to_string(inst.graph().topology()) << '\n';
  out << "graph_seed " << inst.graph().seed() << '\n';
  out << "true_model";
  for (Eigen::Index i = 0; i < inst.true_model().size(); ++i)
    out << ' ' << format_double(inst.true_model()[i]);
  out << '\n';
  out << "nodes\n";
  for (NodeId v = 0; v < inst.size(); ++v) {
    for (Eigen::Index i = 0; i < inst.features().cols(); ++i)
      out << format_double(inst.features()(v, i)) << ' ';
    out << format_double(inst.responses()[v]) << ' ' << (inst.high_variance()[v] ? 'H' : 'L')
        << '\n';
  }
  const auto edges = inst.graph().edges();
  out << "edges " << edges.size() << '\n';
  for (auto [u, v] : edges) out << u << ' ' << v << '\n';
}

ProblemInstance read_instance(std::istream& in) {
  std::map<std::string, std::string> header;
  std::vector<double> truth;
  std::string line;
  auto fail = [](const std::string& why) -> void {
    throw InvalidArgument("instance file: " + why);
  };
  bool saw_nodes = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "nodes") {
      saw_nodes = true;
      break;
    }
    if (key == "true_model") {
      std::string tok;
      while (ls >> tok) truth.push_back(parse_double(tok));
      continue;
    }
    std::string value;
    ls >> value;
    header[key] = value;
  }
  if (!saw_nodes) fail("missing 'nodes' section");
  for (const char* k : {"n", "d", "loss"})
    if (!header.contains(k)) fail(std::string("missing header field '") + k + "'");

  DataParams p;
  const auto n = static_cast<std::size_t>(std::stoull(header["n"]));
  p.dim = static_cast<std::size_t>(std::stoull(header["d"]));
  p.loss = parse_loss_model(header["loss"]);
  auto get = [&](const char* k, auto& field, auto parse) {
    if (auto it = header.find(k); it != header.end()) field = parse(it->second);
  };
  get("heterogeneous", p.heterogeneous, [](const std::string& s) { return s == "1"; });
  get("sigma_sq", p.sigma_sq, parse_double);
  get("sigma_low_sq", p.sigma_low_sq, parse_double);
  get("sigma_high_sq", p.sigma_high_sq, parse_double);
  get("p_high", p.p_high, parse_double);
  get("placement", p.placement, [](const std::string& s) { return parse_placement(s); });
  get("noise_std", p.noise_std, parse_double);
  get("model_seed", p.model_seed, [](const std::string& s) { return std::stoull(s); });
  get("data_seed", p.data_seed, [](const std::string& s) { return std::stoull(s); });
  Topology topo = Topology::custom;
  std::uint64_t graph_seed = 0;
  get("topology", topo, [](const std::string& s) { return parse_topology(s); });
  get("graph_seed", graph_seed, [](const std::string& s) { return std::stoull(s); });

  Eigen::MatrixXd a(n, p.dim);
  Eigen::VectorXd y(n);
  std::vector<bool> high(n);
  for (std::size_t v = 0; v < n; ++v) {
    if (!std::getline(in, line)) fail("truncated node rows");
    std::istringstream ls(line);
    std::string tok;
    for (std::size_t i = 0; i < p.dim; ++i) {
      if (!(ls >> tok)) fail("short node row " + std::to_string(v));
      a(v, i) = parse_double(tok);
    }
    if (!(ls >> tok)) fail("missing response in node row " + std::to_string(v));
    y[v] = parse_double(tok);
    if (!(ls >> tok) || (tok != "H" && tok != "L")) fail("missing class in node row " + std::to_string(v));
    high[v] = tok == "H";
  }
  std::size_t m = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string key;
    ls >> key >> m;
    if (key != "edges") fail("expected 'edges <m>'");
    break;
  }
  std::vector<Edge> edges;
  edges.reserve(m);
  for (std::size_t e = 0; e < m; ++e) {
    if (!std::getline(in, line)) fail("truncated edge list");
    std::istringstream ls(line);
    NodeId u = 0, v = 0;
    if (!(ls >> u >> v)) fail("bad edge line '" + line + "'");
    edges.emplace_back(u, v);
  }
  Eigen::VectorXd truth_vec = Eigen::Map<Eigen::VectorXd>(truth.data(), static_cast<Eigen::Index>(truth.size()));
  return ProblemInstance(Graph::from_edges(n, edges, topo, graph_seed), std::move(a), std::move(y),
                         p.loss, std::move(high), std::move(truth_vec), p);
}

}  // namespace rwl
