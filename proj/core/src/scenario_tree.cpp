#include "illiq/scenario_tree.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>

namespace illiq {

namespace {
[[noreturn]] void fail(const std::string& msg) {
    throw std::invalid_argument("ScenarioTree: " + msg);
}
}  // namespace

std::shared_ptr<const ScenarioTree> ScenarioTree::build(const std::vector<NodeSpec>& specs) {
    if (specs.empty()) fail("no nodes");

    std::map<int, int> index_of;  // external id -> dense index
    for (std::size_t i = 0; i < specs.size(); ++i) {
        if (index_of.count(specs[i].id)) fail("duplicate node id " + std::to_string(specs[i].id));
        index_of[specs[i].id] = static_cast<int>(i);
    }

    auto tree = std::shared_ptr<ScenarioTree>(new ScenarioTree());
    int n = static_cast<int>(specs.size());
    tree->parent_.resize(n);
    tree->time_.resize(n);
    tree->external_id_.resize(n);
    tree->cond_prob_.resize(n);
    tree->prob_.assign(n, 0.0);
    tree->children_.assign(n, {});

    int roots = 0;
    for (int i = 0; i < n; ++i) {
        const auto& s = specs[i];
        tree->external_id_[i] = s.id;
        tree->time_[i] = s.time;
        tree->cond_prob_[i] = s.prob;
        if (s.parent < 0) {
            ++roots;
            tree->parent_[i] = -1;
            if (s.time != 0) fail("root must sit at time 0");
            if (std::abs(s.prob - 1.0) > 1e-12) fail("root probability must be 1");
        } else {
            auto it = index_of.find(s.parent);
            if (it == index_of.end())
                fail("orphan node " + std::to_string(s.id) + ": unknown parent");
            tree->parent_[i] = it->second;
            if (!(s.prob > 0.0) || s.prob > 1.0) fail("conditional probability outside (0,1]");
        }
    }
    if (roots == 0) fail("no root node");
    if (roots > 1) fail("multiple roots: forests are not supported");
    if (tree->parent_[0] != -1) fail("node listed first must be the root");

    for (int i = 0; i < n; ++i) {
        if (tree->parent_[i] >= 0) {
            if (tree->time_[i] != tree->time_[tree->parent_[i]] + 1)
                fail("node " + std::to_string(specs[i].id) + ": time must be parent time + 1");
            tree->children_[tree->parent_[i]].push_back(i);
        }
        // walk to the root; more than n steps means a parent cycle
        int hops = 0;
        for (int v = i; v != -1; v = tree->parent_[v])
            if (++hops > n) fail("cycle detected in parent links");
    }

    tree->horizon_ = *std::max_element(tree->time_.begin(), tree->time_.end());
    tree->by_time_.assign(tree->horizon_ + 1, {});
    for (int i = 0; i < n; ++i) tree->by_time_[tree->time_[i]].push_back(i);

    // unconditional probabilities, child-probability sums, leaf depth
    tree->prob_[0] = 1.0;
    for (int t = 0; t < tree->horizon_; ++t)
        for (int v : tree->by_time_[t]) {
            if (tree->children_[v].empty())
                fail("leaf at wrong depth: node " + std::to_string(specs[v].id));
            double sum = 0.0;
            for (int c : tree->children_[v]) {
                tree->prob_[c] = tree->prob_[v] * tree->cond_prob_[c];
                sum += tree->cond_prob_[c];
            }
            if (std::abs(sum - 1.0) > 1e-9)
                fail("probabilities do not sum to 1 under node " + std::to_string(specs[v].id));
        }

    for (int v : tree->by_time_[tree->horizon_]) tree->leaves_.push_back(v);
    for (int leaf : tree->leaves_) {
        std::vector<int> p;
        for (int v = leaf; v != -1; v = tree->parent_[v]) p.push_back(v);
        std::reverse(p.begin(), p.end());
        tree->paths_.push_back(std::move(p));
    }
    return tree;
}

ClaimProcess::ClaimProcess(TreePtr tree, int dim) : tree_(std::move(tree)) {
    if (!tree_) throw std::invalid_argument("ClaimProcess: null tree");
    if (dim <= 0) throw std::invalid_argument("ClaimProcess: dimension must be positive");
    values_ = Eigen::MatrixXd::Zero(tree_->num_nodes(), dim);
}

ClaimProcess::ClaimProcess(TreePtr tree, Eigen::MatrixXd values)
    : tree_(std::move(tree)), values_(std::move(values)) {
    if (!tree_) throw std::invalid_argument("ClaimProcess: null tree");
    if (values_.rows() != tree_->num_nodes())
        throw std::invalid_argument("ClaimProcess: one row per node required");
}

double ClaimProcess::expectation(int j) const {
    double v = 0.0;
    for (int n = 0; n < tree_->num_nodes(); ++n) v += tree_->prob(n) * values_(n, j);
    return v;
}

ClaimProcess ClaimProcess::operator+(const ClaimProcess& o) const {
    ClaimProcess r = *this;
    r.values_ += o.values_;
    return r;
}

ClaimProcess ClaimProcess::operator-(const ClaimProcess& o) const {
    ClaimProcess r = *this;
    r.values_ -= o.values_;
    return r;
}

ClaimProcess ClaimProcess::operator*(double s) const {
    ClaimProcess r = *this;
    r.values_ *= s;
    return r;
}

ClaimProcess conditional_expectation(const ClaimProcess& proc, int s, int t) {
    const auto& tree = proc.tree();
    if (t > s) throw std::invalid_argument("conditional_expectation: t must be <= s");
    if (s > tree->horizon()) throw std::invalid_argument("conditional_expectation: s beyond horizon");

    ClaimProcess out(tree, proc.dim());
    // average over time-s descendants weighted by P(descendant)/P(node)
    for (int v : tree->nodes_at(t)) {
        Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(proc.dim());
        double mass = 0.0;
        // breadth-first from v down to time s
        std::vector<int> frontier{v};
        for (int depth = t; depth < s; ++depth) {
            std::vector<int> next;
            for (int u : frontier)
                for (int c : tree->children(u)) next.push_back(c);
            frontier = std::move(next);
        }
        for (int u : frontier) {
            acc += tree->prob(u) * proc.values().row(u);
            mass += tree->prob(u);
        }
        out.values().row(v) = acc / mass;
    }
    return out;
}

ClaimProcess adapted_projection(const TreePtr& tree, const RawProcess& raw) {
    int L = static_cast<int>(tree->leaves().size());
    int T = tree->horizon();
    if (raw.values.rows() != L || raw.values.cols() != (T + 1) * raw.dim)
        throw std::invalid_argument("adapted_projection: raw size mismatch");

    ClaimProcess out(tree, raw.dim);
    std::vector<double> mass(tree->num_nodes(), 0.0);
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(tree->num_nodes(), raw.dim);
    for (int l = 0; l < L; ++l) {
        int leaf = tree->leaves()[l];
        double pl = tree->prob(leaf);
        for (int v : tree->path(l)) {
            int t = tree->time(v);
            for (int j = 0; j < raw.dim; ++j) acc(v, j) += pl * raw.values(l, t * raw.dim + j);
            mass[v] += pl;
        }
    }
    for (int v = 0; v < tree->num_nodes(); ++v) out.values().row(v) = acc.row(v) / mass[v];
    return out;
}

double pairing(const ClaimProcess& c, const ClaimProcess& q) {
    const auto& tree = c.tree();
    double v = 0.0;
    for (int n = 0; n < tree->num_nodes(); ++n) v += tree->prob(n) * c.scalar(n) * q.scalar(n);
    return v;
}

}  // namespace illiq
