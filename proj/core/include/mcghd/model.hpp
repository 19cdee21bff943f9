#pragma once

#include <Eigen/Dense>

#include <string>
#include <string_view>
#include <vector>

namespace mcghd {

/// Model family. The CGHD component record is shared by all four; the family
/// decides which parts of it are live.
enum class Family {
  MGHD,     ///< GHD components (inner weight fixed at 1)
  MMSGHD,   ///< multiple-scaled GHD components (inner weight fixed at 0)
  McMSGHD,  ///< MSGHD with every index constrained above 1 (convex contours)
  MCGHD,    ///< coalesced GHD: free inner weight in [0, 1]
};

inline constexpr Family kAllFamilies[] = {Family::MGHD, Family::MMSGHD, Family::McMSGHD,
                                          Family::MCGHD};

/// Lower-case tag used on the command line and in model documents.
std::string_view family_name(Family family);

/// Parses a lower-case or upper-case family tag; throws InputError.
Family parse_family(std::string_view name);

/// One coalesced generalized hyperbolic component. The location and skewness
/// live in rotated coordinates: every sub-density evaluates at y = gamma' x.
struct CGHDComponent {
  Eigen::VectorXd mu;      ///< location (rotated coordinates)
  Eigen::MatrixXd gamma;   ///< orthogonal eigenvector matrix
  Eigen::VectorXd phi;     ///< diagonal scale, all entries > 0
  Eigen::VectorXd beta;    ///< skewness (rotated coordinates)
  Eigen::VectorXd omega;   ///< per-direction concentrations (MSGHD part)
  Eigen::VectorXd lambda;  ///< per-direction indices (MSGHD part)
  double omega0 = 1.0;     ///< concentration of the GHD part
  double lambda0 = -0.5;   ///< index of the GHD part
  double varpi = 0.5;      ///< inner mixing weight of the GHD part

  int dim() const { return static_cast<int>(mu.size()); }

  /// Standard-form component: identity rotation, unit scale, no skewness.
  static CGHDComponent standard(int p);

  /// Throws InputError when any invariant is violated. `convex` additionally
  /// requires every MSGHD index above 1.
  void validate(bool convex = false) const;
};

struct MixtureModel {
  Family family = Family::MCGHD;
  Eigen::VectorXd pi;  ///< mixing proportions
  std::vector<CGHDComponent> components;

  int num_components() const { return static_cast<int>(components.size()); }
  int dim() const { return components.empty() ? 0 : components.front().dim(); }

  /// Checks proportions, component invariants and the family's inner-weight rule.
  void validate() const;
};

/// Inner weight the family imposes, or a negative value when it is free.
double fixed_varpi(Family family);

}  // namespace mcghd
