#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "rwl/graph.hpp"

namespace rwl {

enum class LossModel { linear_regression, logistic_regression };
enum class Placement { bernoulli, fixed_count };

std::string_view to_string(LossModel m);
LossModel parse_loss_model(std::string_view s);
std::string_view to_string(Placement p);
Placement parse_placement(std::string_view s);

// Generator settings, kept with the instance so it can be regenerated.
struct DataParams {
  bool heterogeneous = false;
  std::size_t dim = 10;
  double sigma_sq = 1.0;      // homogeneous feature variance
  double sigma_low_sq = 1.0;  // heterogeneous: low-variance class
  double sigma_high_sq = 100.0;
  double p_high = 0.002;
  Placement placement = Placement::fixed_count;
  double noise_std = 1.0;     // label noise, linear regression only
  LossModel loss = LossModel::linear_regression;
  std::uint64_t model_seed = 1;
  std::uint64_t data_seed = 2;

  bool operator==(const DataParams&) const = default;
};

// One data point (A_v, y_v) per node of a graph plus the derived smoothness
// statistics used by the samplers and step-size rules.
//
// Local losses carry no 1/n factor:
//   linear:   f_v(x) = (y_v - x'A_v)^2,                  L_v = 2 |A_v|^2
//   logistic: f_v(x) = log(1 + e^{x'A_v}) - y_v x'A_v,   L_v = |A_v|^2 / 4
// and the global objective is their mean.
class ProblemInstance {
 public:
  // features is n x d (row v is A_v). high_variance and true_model may be
  // empty. Throws InvalidArgument on shape mismatch or a zero feature row.
  ProblemInstance(Graph graph, Eigen::MatrixXd features, Eigen::VectorXd responses,
                  LossModel loss, std::vector<bool> high_variance = {},
                  Eigen::VectorXd true_model = {}, DataParams params = {});

  const Graph& graph() const { return graph_; }
  std::size_t size() const { return graph_.size(); }
  std::size_t dim() const { return static_cast<std::size_t>(features_.cols()); }
  LossModel loss() const { return loss_; }

  const Eigen::MatrixXd& features() const { return features_; }
  const Eigen::VectorXd& responses() const { return responses_; }
  const std::vector<bool>& high_variance() const { return high_variance_; }
  const Eigen::VectorXd& true_model() const { return true_model_; }
  const DataParams& params() const { return params_; }

  const Eigen::VectorXd& lipschitz() const { return lipschitz_; }
  double lipschitz_mean() const { return l_mean_; }
  double lipschitz_min() const { return l_min_; }
  double lipschitz_max() const { return l_max_; }

  // Exact minimiser; only for linear regression.
  bool has_optimum() const { return x_star_.has_value(); }
  const Eigen::VectorXd& optimum() const;  // throws Unsupported

  // max_v / mean_v |grad f_v(x*)|^2; NaN without an optimum.
  double sigma_star_sq() const { return sigma_star_sq_; }
  double sigma_max_sq() const { return sigma_max_sq_; }

  std::size_t high_count() const;

 private:
  Graph graph_;
  Eigen::MatrixXd features_;
  Eigen::VectorXd responses_;
  LossModel loss_;
  std::vector<bool> high_variance_;
  Eigen::VectorXd true_model_;
  DataParams params_;

  Eigen::VectorXd lipschitz_;
  double l_mean_ = 0, l_min_ = 0, l_max_ = 0;
  std::optional<Eigen::VectorXd> x_star_;
  double sigma_star_sq_;
  double sigma_max_sq_;
};

// A_v ~ N_d(0, sigma_sq I), x ~ N_d(0, I) from model_seed, y_v = A_v'x + noise.
ProblemInstance gen_homogeneous(Graph graph, DataParams params);

// As gen_homogeneous, but each node's variance is sigma_high_sq with
// probability p_high (bernoulli) or for exactly round(p_high * n) uniformly
// chosen nodes (fixed_count).
ProblemInstance gen_heterogeneous(Graph graph, DataParams params);

// Dispatches on params.heterogeneous.
ProblemInstance generate_instance(Graph graph, const DataParams& params);

// All three throw InvalidArgument on a dimension mismatch or bad node id.
Eigen::VectorXd local_grad(const ProblemInstance& inst, NodeId v, const Eigen::VectorXd& x);
double local_loss(const ProblemInstance& inst, NodeId v, const Eigen::VectorXd& x);
double global_loss(const ProblemInstance& inst, const Eigen::VectorXd& x);
Eigen::VectorXd global_grad(const ProblemInstance& inst, const Eigen::VectorXd& x);

// Least-squares minimiser via the normal equations. A ridge of
// 1e-10 * trace / d is added only when the Gram matrix is numerically
// singular. Throws Unsupported for logistic regression.
Eigen::VectorXd solve_optimum(const Eigen::MatrixXd& features, const Eigen::VectorXd& responses);
Eigen::VectorXd solve_optimum(const ProblemInstance& inst);

// Plain-text instance file: header block, one row per node
// ("A_1 ... A_d y class"), then the edge list. Values use 17 significant
// digits so reading back reproduces the instance bit for bit.
void write_instance(const ProblemInstance& inst, std::ostream& out);
ProblemInstance read_instance(std::istream& in);

}  // namespace rwl
