#include "network_simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace effeval::transport::detail {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Artificial arcs connect every node to an extra root. With real costs in
// [0, 1] any cost above 1/2 makes a source->root->sink detour strictly worse
// than the direct arc, so no artificial flow survives at the optimum.
constexpr double kArtificialCost = 2.0;

class Solver {
 public:
  Solver(std::span<const double> supply, std::span<const double> demand,
         std::span<const double> costs)
      : n_(supply.size()),
        m_(demand.size()),
        real_arcs_(n_ * m_),
        nodes_(n_ + m_ + 1),
        root_(n_ + m_),
        costs_(costs),
        flow_(real_arcs_ + n_ + m_, 0.0),
        in_basis_(real_arcs_ + n_ + m_, 0),
        parent_(nodes_),
        pred_(nodes_),
        up_(nodes_),
        depth_(nodes_),
        pi_(nodes_) {
    // Initial strongly feasible tree: every source ships to the root and the
    // root feeds every sink. All masses are positive, so each tree arc can
    // carry flow toward the root.
    links_.resize(nodes_);
    for (std::size_t u = 0; u < n_ + m_; ++u) links_[u].reserve(u < n_ ? m_ + 1 : n_ + 1);
    links_[root_].reserve(n_ + m_);
    for (std::size_t u = 0; u < n_ + m_; ++u) {
      const std::size_t arc = real_arcs_ + u;
      flow_[arc] = u < n_ ? supply[u] : demand[u - n_];
      in_basis_[arc] = true;
      links_[u].push_back(arc);
      links_[root_].push_back(arc);
    }
    block_ = std::max<std::size_t>(10, static_cast<std::size_t>(
                                           std::ceil(std::sqrt(static_cast<double>(arc_count())))));
  }

  SimplexOutcome run(double eps, std::size_t max_pivots) {
    SimplexOutcome out;
    parent_[root_] = root_;
    depth_[root_] = 0;
    pi_[root_] = 0.0;
    relabel_below(root_);
    while (true) {
      const long entering = find_entering(eps);
      if (entering < 0) {
        out.converged = true;
        break;
      }
      if (out.pivots >= max_pivots || !pivot(static_cast<std::size_t>(entering))) break;
      ++out.pivots;
    }

    out.flow.assign(flow_.begin(), flow_.begin() + static_cast<long>(real_arcs_));
    out.artificial.assign(flow_.begin() + static_cast<long>(real_arcs_), flow_.end());
    out.potential.assign(pi_.begin(), pi_.begin() + static_cast<long>(n_ + m_));
    double min_rc = kInf;
    for (std::size_t arc = 0; arc < real_arcs_; ++arc) min_rc = std::min(min_rc, reduced_cost(arc));
    out.min_reduced_cost = real_arcs_ == 0 ? 0.0 : min_rc;
    return out;
  }

 private:
  std::size_t arc_count() const noexcept { return real_arcs_ + n_ + m_; }

  std::size_t source(std::size_t arc) const noexcept {
    if (arc < real_arcs_) return arc / m_;
    const std::size_t u = arc - real_arcs_;
    return u < n_ ? u : root_;
  }

  std::size_t target(std::size_t arc) const noexcept {
    if (arc < real_arcs_) return n_ + arc % m_;
    const std::size_t u = arc - real_arcs_;
    return u < n_ ? root_ : u;
  }

  double cost(std::size_t arc) const noexcept {
    return arc < real_arcs_ ? costs_[arc] : kArtificialCost;
  }

  double reduced_cost(std::size_t arc) const noexcept {
    return cost(arc) + pi_[source(arc)] - pi_[target(arc)];
  }

  // Sets parent, depth and potential for every node below `top` from its
  // tree parent. Potentials are sums of arc costs along the root path, so the
  // values do not depend on the pivot history.
  void relabel_below(std::size_t top) {
    queue_.clear();
    queue_.push_back(top);
    for (std::size_t head = 0; head < queue_.size(); ++head) {
      const std::size_t u = queue_[head];
      for (std::size_t arc : links_[u]) {
        if (u != root_ && arc == pred_[u]) continue;
        const bool out_of_u = source(arc) == u;
        const std::size_t v = out_of_u ? target(arc) : source(arc);
        parent_[v] = u;
        pred_[v] = arc;
        up_[v] = !out_of_u;  // arc oriented child -> parent
        depth_[v] = depth_[u] + 1;
        pi_[v] = out_of_u ? pi_[u] + cost(arc) : pi_[u] - cost(arc);
        queue_.push_back(v);
      }
    }
  }

  void unlink(std::size_t node, std::size_t arc) {
    auto& l = links_[node];
    *std::find(l.begin(), l.end(), arc) = l.back();
    l.pop_back();
  }

  // Block-search pricing: scan arcs cyclically in blocks and take the most
  // negative reduced cost of the first block that contains an eligible arc.
  long find_entering(double eps) {
    const std::size_t total = arc_count();
    double best = 0.0;
    long best_arc = -1;
    std::size_t in_block = 0;
    std::size_t arc = next_arc_;
    // (row, col) of `arc` while it is a real arc, tracked to avoid div/mod
    std::size_t row = arc < real_arcs_ ? arc / m_ : 0;
    std::size_t col = arc < real_arcs_ ? arc % m_ : 0;
    for (std::size_t step = 0; step < total; ++step) {
      if (!in_basis_[arc]) {
        const double rc = arc < real_arcs_ ? costs_[arc] + pi_[row] - pi_[n_ + col] : reduced_cost(arc);
        if (rc < best) {
          best = rc;
          best_arc = static_cast<long>(arc);
        }
      }
      if (++arc == total) arc = 0;
      if (++col == m_) {
        col = 0;
        ++row;
      }
      if (arc == 0) row = col = 0;
      if (++in_block == block_) {
        if (best < -eps) {
          next_arc_ = arc;
          return best_arc;
        }
        in_block = 0;
      }
    }
    return best < -eps ? best_arc : -1;
  }

  // Pushes flow around the cycle closed by `entering` and swaps the leaving
  // arc out of the basis. The leaving arc is the last blocking arc met when
  // walking the cycle from its apex in the entering direction, which keeps
  // the tree strongly feasible and rules out cycling on degenerate pivots.
  bool pivot(std::size_t entering) {
    const std::size_t first = source(entering);
    const std::size_t second = target(entering);

    std::size_t a = first;
    std::size_t b = second;
    while (a != b) {
      if (depth_[a] > depth_[b]) {
        a = parent_[a];
      } else if (depth_[b] > depth_[a]) {
        b = parent_[b];
      } else {
        a = parent_[a];
        b = parent_[b];
      }
    }
    const std::size_t join = a;

    double delta = kInf;
    std::size_t leaving_node = nodes_;
    bool leaving_on_first_side = false;
    for (std::size_t u = first; u != join; u = parent_[u]) {
      if (up_[u] && flow_[pred_[u]] < delta) {
        delta = flow_[pred_[u]];
        leaving_node = u;
        leaving_on_first_side = true;
      }
    }
    for (std::size_t u = second; u != join; u = parent_[u]) {
      if (!up_[u] && flow_[pred_[u]] <= delta) {
        delta = flow_[pred_[u]];
        leaving_node = u;
        leaving_on_first_side = false;
      }
    }
    if (leaving_node == nodes_ || !std::isfinite(delta)) return false;

    const std::size_t leaving = pred_[leaving_node];
    if (delta > 0.0) {
      flow_[entering] += delta;
      for (std::size_t u = first; u != join; u = parent_[u]) {
        flow_[pred_[u]] += up_[u] ? -delta : delta;
      }
      for (std::size_t u = second; u != join; u = parent_[u]) {
        flow_[pred_[u]] += up_[u] ? delta : -delta;
      }
    }
    flow_[leaving] = 0.0;

    in_basis_[leaving] = false;
    in_basis_[entering] = true;
    unlink(leaving_node, leaving);
    unlink(parent_[leaving_node], leaving);
    links_[first].push_back(entering);
    links_[second].push_back(entering);

    // Only the subtree cut off by the leaving arc moves: it hangs from the
    // entering arc now, re-rooted at the endpoint on its side.
    const std::size_t moved = leaving_on_first_side ? first : second;
    const std::size_t anchor = leaving_on_first_side ? second : first;
    parent_[moved] = anchor;
    pred_[moved] = entering;
    up_[moved] = moved == first;
    depth_[moved] = depth_[anchor] + 1;
    pi_[moved] = moved == first ? pi_[anchor] - cost(entering) : pi_[anchor] + cost(entering);
    relabel_below(moved);
    return true;
  }

  std::size_t n_;
  std::size_t m_;
  std::size_t real_arcs_;
  std::size_t nodes_;
  std::size_t root_;
  std::span<const double> costs_;

  std::vector<double> flow_;
  std::vector<char> in_basis_;
  std::vector<std::vector<std::size_t>> links_;  // basis arcs at each node

  std::vector<std::size_t> parent_;
  std::vector<std::size_t> pred_;
  std::vector<char> up_;
  std::vector<std::size_t> depth_;
  std::vector<double> pi_;

  std::vector<std::size_t> queue_;

  std::size_t block_ = 10;
  std::size_t next_arc_ = 0;
};

}  // namespace

SimplexOutcome network_simplex(std::span<const double> supply, std::span<const double> demand,
                               std::span<const double> costs, double eps,
                               std::size_t max_pivots) {
  Solver solver(supply, demand, costs);
  return solver.run(eps, max_pivots);
}

}  // namespace effeval::transport::detail
