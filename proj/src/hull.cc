#include "ellipsoid_cp/hull.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>

#include "ellipsoid_cp/error.h"

namespace ellipsoid_cp {
namespace {

struct Face {
  std::vector<int> verts;
  Eigen::VectorXd normal;
  double offset = 0.0;
  std::vector<int> neighbors;  // neighbors[k] shares every vertex but verts[k]
  std::vector<int> outside;
  bool alive = true;
};

// Generalized cross product of the d-1 edge vectors v_i - v_0.
Eigen::VectorXd Normal(std::span<const Eigen::VectorXd> points,
                       const std::vector<int>& verts) {
  const int d = static_cast<int>(verts.size());
  Eigen::MatrixXd edges(d - 1, d);
  for (int i = 1; i < d; ++i) {
    edges.row(i - 1) = (points[verts[i]] - points[verts[0]]).transpose();
  }
  Eigen::VectorXd normal(d);
  for (int j = 0; j < d; ++j) {
    Eigen::MatrixXd minor(d - 1, d - 1);
    for (int c = 0, mc = 0; c < d; ++c) {
      if (c == j) continue;
      minor.col(mc++) = edges.col(c);
    }
    const double det = d == 1 ? 1.0 : minor.determinant();
    normal(j) = (j % 2 == 0 ? 1.0 : -1.0) * det;
  }
  return normal;
}

class QuickHull {
 public:
  explicit QuickHull(std::span<const Eigen::VectorXd> points)
      : points_(points), dim_(static_cast<int>(points.front().size())) {
    double scale = 0.0;
    for (const auto& p : points_) scale = std::max(scale, p.cwiseAbs().maxCoeff());
    eps_ = 1e-10 * std::max(1.0, scale);
  }

  HullRegion Run() {
    const std::vector<int> simplex = InitialSimplex();
    interior_ = Eigen::VectorXd::Zero(dim_);
    for (int v : simplex) interior_ += points_[v];
    interior_ /= static_cast<double>(simplex.size());

    std::vector<int> created;
    for (int skip = 0; skip <= dim_; ++skip) {
      std::vector<int> verts;
      for (int k = 0; k <= dim_; ++k) {
        if (k != skip) verts.push_back(simplex[k]);
      }
      created.push_back(AddFace(std::move(verts)));
    }
    Link(created);

    std::vector<int> candidates;
    for (int i = 0; i < static_cast<int>(points_.size()); ++i) {
      if (std::find(simplex.begin(), simplex.end(), i) == simplex.end()) {
        candidates.push_back(i);
      }
    }
    Assign(candidates, created);

    for (size_t f = 0; f < faces_.size(); ++f) {
      if (faces_[f].alive && !faces_[f].outside.empty()) Expand(static_cast<int>(f));
    }
    return Collect();
  }

 private:
  double Distance(const Face& face, int point) const {
    return face.normal.dot(points_[point]) - face.offset;
  }

  std::vector<int> InitialSimplex() const {
    const int n = static_cast<int>(points_.size());
    Require(n >= dim_ + 1, ErrorCode::kDegenerateHull,
            std::to_string(n) + " points cannot span " + std::to_string(dim_) +
                " dimensions");
    int first = 0;
    for (int i = 1; i < n; ++i) {
      if (points_[i](0) < points_[first](0)) first = i;
    }
    std::vector<int> chosen{first};
    std::vector<Eigen::VectorXd> basis;  // orthonormal directions spanned so far
    for (int k = 1; k <= dim_; ++k) {
      int best = -1;
      double best_dist = eps_;
      Eigen::VectorXd best_dir;
      for (int i = 0; i < n; ++i) {
        Eigen::VectorXd r = points_[i] - points_[first];
        for (const auto& b : basis) r -= b.dot(r) * b;
        const double dist = r.norm();
        if (dist > best_dist) {
          best_dist = dist;
          best = i;
          best_dir = r;
        }
      }
      Require(best >= 0, ErrorCode::kDegenerateHull,
              "points are contained in a " + std::to_string(k - 1) +
                  "-dimensional affine subspace");
      basis.push_back(best_dir / best_dist);
      chosen.push_back(best);
    }
    return chosen;
  }

  int AddFace(std::vector<int> verts) {
    Face face;
    face.normal = Normal(points_, verts);
    const double norm = face.normal.norm();
    Require(norm > 0.0, ErrorCode::kDegenerateHull, "zero-area facet");
    face.normal /= norm;
    face.offset = face.normal.dot(points_[verts[0]]);
    if (face.normal.dot(interior_) > face.offset) {
      face.normal = -face.normal;
      face.offset = -face.offset;
    }
    face.verts = std::move(verts);
    face.neighbors.assign(dim_, -1);
    faces_.push_back(std::move(face));
    return static_cast<int>(faces_.size()) - 1;
  }

  // Pairs up faces among `ids` that share a ridge and whose neighbour slot
  // is still open.
  void Link(const std::vector<int>& ids) {
    std::map<std::vector<int>, std::pair<int, int>> open;
    for (int id : ids) {
      for (int k = 0; k < dim_; ++k) {
        if (faces_[id].neighbors[k] >= 0) continue;
        std::vector<int> ridge;
        for (int j = 0; j < dim_; ++j) {
          if (j != k) ridge.push_back(faces_[id].verts[j]);
        }
        std::sort(ridge.begin(), ridge.end());
        auto it = open.find(ridge);
        if (it == open.end()) {
          open.emplace(std::move(ridge), std::make_pair(id, k));
        } else {
          faces_[id].neighbors[k] = it->second.first;
          faces_[it->second.first].neighbors[it->second.second] = id;
          open.erase(it);
        }
      }
    }
  }

  void Assign(const std::vector<int>& candidates, const std::vector<int>& targets) {
    for (int point : candidates) {
      for (int id : targets) {
        if (Distance(faces_[id], point) > eps_) {
          faces_[id].outside.push_back(point);
          break;
        }
      }
    }
  }

  void Expand(int start) {
    const Face& seed = faces_[start];
    int eye = seed.outside.front();
    double far = Distance(seed, eye);
    for (int point : seed.outside) {
      const double dist = Distance(seed, point);
      if (dist > far) {
        far = dist;
        eye = point;
      }
    }

    std::vector<int> visible{start};
    std::vector<char> is_visible(faces_.size(), 0);
    is_visible[start] = 1;
    for (size_t i = 0; i < visible.size(); ++i) {
      for (int nb : faces_[visible[i]].neighbors) {
        if (!is_visible[nb] && Distance(faces_[nb], eye) > eps_) {
          is_visible[nb] = 1;
          visible.push_back(nb);
        }
      }
    }

    struct HorizonRidge {
      std::vector<int> verts;
      int outer_face;
      int dead_face;
    };
    std::vector<HorizonRidge> horizon;
    for (int f : visible) {
      for (int k = 0; k < dim_; ++k) {
        const int nb = faces_[f].neighbors[k];
        if (is_visible[nb]) continue;
        std::vector<int> ridge;
        for (int j = 0; j < dim_; ++j) {
          if (j != k) ridge.push_back(faces_[f].verts[j]);
        }
        horizon.push_back({std::move(ridge), nb, f});
      }
    }

    std::vector<int> orphans;
    for (int f : visible) {
      faces_[f].alive = false;
      for (int point : faces_[f].outside) {
        if (point != eye) orphans.push_back(point);
      }
      faces_[f].outside.clear();
      faces_[f].outside.shrink_to_fit();
    }

    std::vector<int> created;
    for (auto& ridge : horizon) {
      std::vector<int> verts = ridge.verts;
      verts.push_back(eye);
      const int id = AddFace(std::move(verts));
      // The eye sits last, so its opposite ridge is the horizon ridge.
      faces_[id].neighbors[dim_ - 1] = ridge.outer_face;
      for (int& nb : faces_[ridge.outer_face].neighbors) {
        if (nb == ridge.dead_face) nb = id;
      }
      created.push_back(id);
    }
    Link(created);
    Assign(orphans, created);
  }

  HullRegion Collect() const {
    HullRegion out;
    std::map<int, int> remap;
    for (const Face& face : faces_) {
      if (!face.alive) continue;
      std::vector<int> local;
      for (int v : face.verts) {
        auto [it, inserted] = remap.emplace(v, static_cast<int>(remap.size()));
        local.push_back(it->second);
      }
      out.facets.push_back({face.normal, face.offset});
      out.facet_vertices.push_back(std::move(local));
    }
    out.vertices.resize(remap.size());
    for (const auto& [source, target] : remap) out.vertices[target] = points_[source];

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(dim_);
    for (const auto& v : out.vertices) centroid += v;
    centroid /= static_cast<double>(out.vertices.size());
    double factorial = 1.0;
    for (int k = 2; k <= dim_; ++k) factorial *= k;
    for (const auto& facet : out.facet_vertices) {
      Eigen::MatrixXd edges(dim_, dim_);
      for (int k = 0; k < dim_; ++k) edges.col(k) = out.vertices[facet[k]] - centroid;
      out.volume += std::abs(edges.determinant()) / factorial;
    }
    return out;
  }

  std::span<const Eigen::VectorXd> points_;
  int dim_;
  double eps_ = 0.0;
  Eigen::VectorXd interior_;
  std::vector<Face> faces_;
};

}  // namespace

HullRegion ConvexHull(std::span<const Eigen::VectorXd> points) {
  Require(!points.empty(), ErrorCode::kDegenerateHull, "no points");
  const auto d = points.front().size();
  Require(d <= kMaxHullDim, ErrorCode::kDimensionTooHigh,
          "convex hulls are limited to dimension " + std::to_string(kMaxHullDim) +
              ", got " + std::to_string(d));
  Require(d >= 2, ErrorCode::kInvalidArgument, "convex hulls need dimension >= 2");
  for (const auto& p : points) {
    Require(p.size() == d, ErrorCode::kDimensionMismatch, "points differ in dimension");
  }
  return QuickHull(points).Run();
}

HullRegion HullFromCovered(std::span<const Eigen::VectorXd> points,
                           const EllipsoidSpec& spec) {
  const auto d = spec.center.size();
  Require(d <= kMaxHullDim, ErrorCode::kDimensionTooHigh,
          "convex hulls are limited to dimension " + std::to_string(kMaxHullDim));
  std::vector<Eigen::VectorXd> covered;
  covered.reserve(points.size());
  for (const auto& p : points) {
    if (Contains(spec, spec.center + p)) covered.push_back(p);
  }
  return ConvexHull(covered);
}

bool HullContains(const HullRegion& region, const Eigen::VectorXd& y) {
  Require(y.size() == region.dim(), ErrorCode::kDimensionMismatch,
          "point has dimension " + std::to_string(y.size()) + ", hull has " +
              std::to_string(region.dim()));
  for (const auto& facet : region.facets) {
    if (facet.normal.dot(y) > facet.offset + kHullTolerance) return false;
  }
  return true;
}

}  // namespace ellipsoid_cp
