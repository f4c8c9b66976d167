#pragma once
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "rdphase/core/box_domain.hpp"

namespace rdphase::loglaplace {

// Node grid with boundary nodes exactly on the box faces.
class NodeGrid {
 public:
  NodeGrid() = default;
  NodeGrid(const BoxDomain& domain, double pitch);

  const BoxDomain& domain() const { return domain_; }
  int dim() const { return domain_.dim(); }
  double pitch() const { return h_; }
  std::int64_t nodes(int axis) const { return n_[axis]; }
  std::size_t size() const { return total_; }
  std::size_t stride(int axis) const { return stride_[axis]; }

  std::array<std::int64_t, kMaxDim> unflatten(std::size_t k) const;
  std::size_t flatten(const std::array<std::int64_t, kMaxDim>& idx) const;
  Point point(std::size_t k) const;
  bool is_boundary(std::size_t k) const;
  std::size_t nearest(const Point& x) const;

 private:
  BoxDomain domain_;
  double h_ = 1.0;
  std::array<std::int64_t, kMaxDim> n_{1, 1, 1};
  std::array<std::size_t, kMaxDim> stride_{1, 1, 1};
  std::size_t total_ = 1;
};

struct GridField {
  NodeGrid grid;
  std::vector<double> values;                    // all nodes; boundary nodes carry boundary data
  std::optional<std::vector<double>> laplacian;  // exact Laplacian, when known analytically

  GridField() = default;
  explicit GridField(const NodeGrid& g, double v = 0.0) : grid(g), values(g.size(), v) {}
  static GridField from_function(const NodeGrid& g, const std::function<double(const Point&)>& f);

  double at(const Point& x) const { return values[grid.nearest(x)]; }
};

// Second-order finite-difference Laplacian at an interior node.
double discrete_laplacian(const NodeGrid& g, const std::vector<double>& v, std::size_t k);

}  // namespace rdphase::loglaplace
