#pragma once

#include <Eigen/Dense>
#include <memory>
#include <vector>

namespace illiq {

/// Finite scenario tree over trading dates 0..horizon().  Every leaf sits at
/// the final date, node 0 is the unique root, and one-step transition
/// probabilities are strictly positive and sum to one over each node's
/// children.  Adapted processes are stored as one value (or vector) per node.
class ScenarioTree {
  public:
    struct NodeSpec {
        int id = 0;
        int time = 0;
        int parent = -1;  // -1 for the root
        double prob = 1.0;  // conditional probability given the parent
    };

    /// Validating constructor; see build() for the error conditions.
    static std::shared_ptr<const ScenarioTree> build(const std::vector<NodeSpec>& specs);

    int num_nodes() const { return static_cast<int>(parent_.size()); }
    int horizon() const { return horizon_; }

    int parent(int n) const { return parent_[n]; }
    int time(int n) const { return time_[n]; }
    const std::vector<int>& children(int n) const { return children_[n]; }
    bool is_leaf(int n) const { return children_[n].empty(); }

    /// Conditional probability of n given its parent (1 for the root).
    double cond_prob(int n) const { return cond_prob_[n]; }
    /// Unconditional probability of reaching n.
    double prob(int n) const { return prob_[n]; }

    const std::vector<int>& nodes_at(int t) const { return by_time_.at(t); }
    const std::vector<int>& leaves() const { return leaves_; }
    /// Nodes on the path from the root to leaf index l (inclusive), by time.
    const std::vector<int>& path(int leaf_ordinal) const { return paths_.at(leaf_ordinal); }

    /// External id a node was declared with (ids are arbitrary in the input).
    int external_id(int n) const { return external_id_[n]; }

  private:
    ScenarioTree() = default;

    int horizon_ = 0;
    std::vector<int> parent_, time_, external_id_;
    std::vector<double> cond_prob_, prob_;
    std::vector<std::vector<int>> children_;
    std::vector<std::vector<int>> by_time_;
    std::vector<int> leaves_;
    std::vector<std::vector<int>> paths_;
};

using TreePtr = std::shared_ptr<const ScenarioTree>;

/// Scalar or vector-valued process with one value per node.
class ClaimProcess {
  public:
    ClaimProcess() = default;
    ClaimProcess(TreePtr tree, int dim);
    ClaimProcess(TreePtr tree, Eigen::MatrixXd values);  // nodes x dim

    static ClaimProcess zero(TreePtr tree, int dim = 1) { return {std::move(tree), dim}; }

    const TreePtr& tree() const { return tree_; }
    int dim() const { return static_cast<int>(values_.cols()); }

    double scalar(int node) const { return values_(node, 0); }
    double operator()(int node, int j = 0) const { return values_(node, j); }
    double& at(int node, int j = 0) { return values_(node, j); }

    const Eigen::MatrixXd& values() const { return values_; }
    Eigen::MatrixXd& values() { return values_; }

    /// E[ sum over components weighted by another scalar process ] helpers.
    double expectation(int j = 0) const;

    ClaimProcess operator+(const ClaimProcess& o) const;
    ClaimProcess operator-(const ClaimProcess& o) const;
    ClaimProcess operator*(double s) const;

  private:
    TreePtr tree_;
    Eigen::MatrixXd values_;
};

/// Trading strategy: one position vector (dimension = number of assets) per
/// node.  Positions at leaves are forced to zero at the end of the horizon by
/// the solvers; the container itself stores values for every node.
using PortfolioProcess = ClaimProcess;

/// E_t of a process observed at time s, returned as a process supported on
/// the time-t slice (values at other nodes are zero).  Requires t <= s.
ClaimProcess conditional_expectation(const ClaimProcess& proc, int s, int t);

/// Path-indexed raw data: value(leaf_ordinal, time) for scalar processes, or
/// a matrix per component stacked column-wise: (leaf, time*dim + j).
struct RawProcess {
    Eigen::MatrixXd values;  // leaves x ((horizon+1) * dim)
    int dim = 1;
};

/// Node-wise conditional expectation of a possibly non-adapted path-indexed
/// process: the value at node n is E[ raw(., t(n)) | history up to n ].
ClaimProcess adapted_projection(const TreePtr& tree, const RawProcess& raw);

/// Inner product <c, q> = E sum_t c_t q_t for scalar processes.
double pairing(const ClaimProcess& c, const ClaimProcess& q);

}  // namespace illiq
