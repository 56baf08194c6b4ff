// Copyright 2026 The pvdyn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <Eigen/Dense>

#include "pvdyn/flops.hpp"

/// 6-D spatial vector algebra.
///
/// Conventions (used by every module):
///   - spatial vectors are ordered angular-before-linear;
///   - a PlueckerTransform X = (E, r) maps coordinates of a parent frame A
///     into a child frame B, where E rotates A-coordinates into B-coordinates
///     and r is the origin of B expressed in A. Its motion matrix is
///     [E, 0; -E skew(r), E];
///   - forces transform with the dual X* = X^{-T}, so that the power
///     motion . force is invariant.
namespace pvdyn
{

  using Vector3 = Eigen::Vector3d;
  using Matrix3 = Eigen::Matrix3d;
  using Vector6 = Eigen::Matrix<double, 6, 1>;
  using Matrix6 = Eigen::Matrix<double, 6, 6>;

  inline Matrix3 skew(const Vector3 & v)
  {
    Matrix3 s;
    s << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
    return s;
  }

  namespace detail
  {
    // Shared storage for the two spatial vector kinds; the kinds themselves
    // stay distinct types so a motion can never be added to a force.
    template<typename Derived>
    class SpatialVectorBase
    {
    public:
      SpatialVectorBase()
      : data_(Vector6::Zero())
      {
      }
      explicit SpatialVectorBase(const Vector6 & data)
      : data_(data)
      {
      }
      SpatialVectorBase(const Vector3 & top, const Vector3 & bottom)
      {
        data_ << top, bottom;
      }

      static Derived Zero() { return Derived(Vector6::Zero()); }

      const Vector6 & vector() const { return data_; }
      Vector6 & vector() { return data_; }

      Derived operator+(const Derived & o) const
      {
        flops::add(6);
        return Derived(Vector6(data_ + o.data_));
      }
      Derived operator-(const Derived & o) const
      {
        flops::add(6);
        return Derived(Vector6(data_ - o.data_));
      }
      Derived operator-() const { return Derived(Vector6(-data_)); }
      Derived operator*(double s) const
      {
        flops::add(6);
        return Derived(Vector6(data_ * s));
      }
      Derived & operator+=(const Derived & o)
      {
        flops::add(6);
        data_ += o.data_;
        return static_cast<Derived &>(*this);
      }
      Derived & operator-=(const Derived & o)
      {
        flops::add(6);
        data_ -= o.data_;
        return static_cast<Derived &>(*this);
      }
      bool isApprox(const Derived & o, double tol) const
      {
        return (data_ - o.data_).template lpNorm<Eigen::Infinity>() <= tol;
      }

    protected:
      Vector6 data_;
    };
  } // namespace detail

  /// Spatial velocity or acceleration: (angular; linear).
  class SpatialMotion : public detail::SpatialVectorBase<SpatialMotion>
  {
  public:
    using SpatialVectorBase::SpatialVectorBase;

    auto angular() const { return data_.head<3>(); }
    auto linear() const { return data_.tail<3>(); }
    auto angular() { return data_.head<3>(); }
    auto linear() { return data_.tail<3>(); }
  };

  /// Spatial force: (torque; force).
  class SpatialForce : public detail::SpatialVectorBase<SpatialForce>
  {
  public:
    using SpatialVectorBase::SpatialVectorBase;

    auto torque() const { return data_.head<3>(); }
    auto force() const { return data_.tail<3>(); }
    auto torque() { return data_.head<3>(); }
    auto force() { return data_.tail<3>(); }
  };

  /// Power pairing motion . force.
  inline double dot(const SpatialMotion & v, const SpatialForce & f)
  {
    flops::add(11);
    return v.vector().dot(f.vector());
  }

  /// Spatial cross product v x w (motion on motion).
  inline SpatialMotion cross(const SpatialMotion & v, const SpatialMotion & w)
  {
    flops::add(30);
    const Vector3 w_ang = w.angular();
    const Vector3 w_lin = w.linear();
    return SpatialMotion(
      v.angular().cross(w_ang), Vector3(v.angular().cross(w_lin) + v.linear().cross(w_ang)));
  }

  /// Dual spatial cross product v x* f (motion on force).
  inline SpatialForce cross(const SpatialMotion & v, const SpatialForce & f)
  {
    flops::add(30);
    const Vector3 n = f.torque();
    const Vector3 fl = f.force();
    return SpatialForce(Vector3(v.angular().cross(n) + v.linear().cross(fl)), v.angular().cross(fl));
  }

  /// Plücker coordinate transform stored as (rotation, translation).
  struct PlueckerTransform
  {
    Matrix3 rotation = Matrix3::Identity();
    Vector3 translation = Vector3::Zero();

    PlueckerTransform() = default;
    PlueckerTransform(const Matrix3 & E, const Vector3 & r)
    : rotation(E)
    , translation(r)
    {
    }

    static PlueckerTransform Identity() { return {}; }
    static PlueckerTransform Rotation(const Matrix3 & E) { return {E, Vector3::Zero()}; }
    static PlueckerTransform Translation(const Vector3 & r) { return {Matrix3::Identity(), r}; }

    PlueckerTransform inverse() const
    {
      flops::add(15);
      return {rotation.transpose(), -(rotation * translation)};
    }

    /// X v  : motion from parent to child coordinates.
    SpatialMotion apply(const SpatialMotion & v) const
    {
      flops::add(42);
      const Vector3 w = v.angular();
      return SpatialMotion(rotation * w, rotation * (v.linear() - translation.cross(w)));
    }

    /// X* f : force from parent to child coordinates.
    SpatialForce apply(const SpatialForce & f) const
    {
      flops::add(42);
      const Vector3 fl = f.force();
      return SpatialForce(rotation * (f.torque() - translation.cross(fl)), rotation * fl);
    }

    /// X^{-1} v : motion from child back to parent coordinates.
    SpatialMotion apply_inverse(const SpatialMotion & v) const
    {
      flops::add(42);
      const Vector3 w = rotation.transpose() * v.angular();
      return SpatialMotion(w, rotation.transpose() * v.linear() + translation.cross(w));
    }

    /// X^T f : force from child back to parent coordinates.
    SpatialForce apply_transpose(const SpatialForce & f) const
    {
      flops::add(42);
      const Vector3 fl = rotation.transpose() * f.force();
      return SpatialForce(rotation.transpose() * f.torque() + translation.cross(fl), fl);
    }

    /// Composition: (*this) after `inner`.
    PlueckerTransform operator*(const PlueckerTransform & inner) const
    {
      flops::add(63);
      return {rotation * inner.rotation, inner.translation + inner.rotation.transpose() * translation};
    }

    Matrix6 motion_matrix() const
    {
      Matrix6 X;
      X.topLeftCorner<3, 3>() = rotation;
      X.topRightCorner<3, 3>().setZero();
      X.bottomLeftCorner<3, 3>() = -rotation * skew(translation);
      X.bottomRightCorner<3, 3>() = rotation;
      return X;
    }

    Matrix6 force_matrix() const
    {
      Matrix6 X;
      X.topLeftCorner<3, 3>() = rotation;
      X.topRightCorner<3, 3>() = -rotation * skew(translation);
      X.bottomLeftCorner<3, 3>().setZero();
      X.bottomRightCorner<3, 3>() = rotation;
      return X;
    }

    bool isApprox(const PlueckerTransform & o, double tol) const
    {
      return (rotation - o.rotation).lpNorm<Eigen::Infinity>() <= tol
             && (translation - o.translation).lpNorm<Eigen::Infinity>() <= tol;
    }
  };

  inline SpatialMotion transform_motion(const PlueckerTransform & X, const SpatialMotion & v)
  {
    return X.apply(v);
  }

  inline SpatialForce transform_force(const PlueckerTransform & X, const SpatialForce & f)
  {
    return X.apply(f);
  }

  /// Rigid-body inertia: mass, first moment m*c and rotational inertia about
  /// the frame origin.
  struct SpatialInertia
  {
    double mass = 0.0;
    Vector3 first_moment = Vector3::Zero();
    Matrix3 rot_inertia = Matrix3::Zero();

    SpatialInertia() = default;
    SpatialInertia(double m, const Vector3 & h, const Matrix3 & I)
    : mass(m)
    , first_moment(h)
    , rot_inertia(I)
    {
    }

    /// Builds the inertia from the centre of mass and the rotational
    /// inertia about the centre of mass (both in the link frame).
    static SpatialInertia FromMassComInertia(double m, const Vector3 & com, const Matrix3 & I_com)
    {
      return {m, m * com, Matrix3(I_com + m * (com.squaredNorm() * Matrix3::Identity() - com * com.transpose()))};
    }

    Vector3 com() const { return first_moment / mass; }

    Matrix3 inertia_about_com() const
    {
      const Vector3 c = com();
      return rot_inertia - mass * (c.squaredNorm() * Matrix3::Identity() - c * c.transpose());
    }

    Matrix6 matrix() const
    {
      Matrix6 M;
      const Matrix3 hx = skew(first_moment);
      M.topLeftCorner<3, 3>() = rot_inertia;
      M.topRightCorner<3, 3>() = hx;
      M.bottomLeftCorner<3, 3>() = hx.transpose();
      M.bottomRightCorner<3, 3>() = mass * Matrix3::Identity();
      return M;
    }

    SpatialForce apply(const SpatialMotion & v) const
    {
      flops::add(42);
      const Vector3 w = v.angular();
      const Vector3 l = v.linear();
      return SpatialForce(
        Vector3(rot_inertia * w + first_moment.cross(l)), Vector3(mass * l - first_moment.cross(w)));
    }

    SpatialInertia operator+(const SpatialInertia & o) const
    {
      flops::add(13);
      return {mass + o.mass, first_moment + o.first_moment, rot_inertia + o.rot_inertia};
    }

    SpatialInertia & operator+=(const SpatialInertia & o)
    {
      flops::add(13);
      mass += o.mass;
      first_moment += o.first_moment;
      rot_inertia += o.rot_inertia;
      return *this;
    }

    /// Expresses this inertia (given in child coordinates) in the parent
    /// frame of X, i.e. the rigid-body form of X^T I X.
    SpatialInertia expressed_in_parent(const PlueckerTransform & X) const
    {
      flops::add(140);
      const Matrix3 & E = X.rotation;
      const Vector3 & r = X.translation;
      const Vector3 h = E.transpose() * first_moment;
      // Ibar_p = E^T Ibar E + (skew(r) skew(h))^T-style shift terms.
      const Matrix3 Ib = E.transpose() * rot_inertia * E;
      const Matrix3 rx = skew(r);
      const Matrix3 hx = skew(h);
      const Matrix3 shifted = Ib - rx * hx - hx * rx - mass * rx * rx;
      return {mass, h + mass * r, shifted};
    }

    bool isApprox(const SpatialInertia & o, double tol) const
    {
      return std::abs(mass - o.mass) <= tol && (first_moment - o.first_moment).lpNorm<Eigen::Infinity>() <= tol
             && (rot_inertia - o.rot_inertia).lpNorm<Eigen::Infinity>() <= tol;
    }
  };

  /// Articulated-body inertia: a symmetric positive semidefinite 6x6 matrix.
  struct ArticulatedInertia
  {
    Matrix6 matrix = Matrix6::Zero();

    ArticulatedInertia() = default;
    explicit ArticulatedInertia(const Matrix6 & M)
    : matrix(M)
    {
    }
    explicit ArticulatedInertia(const SpatialInertia & I)
    : matrix(I.matrix())
    {
    }
  };

  namespace detail
  {
    /// X^T I X for a symmetric 6x6 I expressed in child coordinates, using
    /// the block structure of X rather than 6x6 products.
    inline Matrix6 congruence(const PlueckerTransform & X, const Matrix6 & I)
    {
      flops::add(414);
      const Matrix3 & E = X.rotation;
      const Matrix3 Et = E.transpose();
      const Matrix3 A = Et * I.topLeftCorner<3, 3>() * E;
      const Matrix3 B = Et * I.topRightCorner<3, 3>() * E;
      const Matrix3 C = Et * I.bottomRightCorner<3, 3>() * E;
      const Matrix3 rx = skew(X.translation);
      const Matrix3 top_right = B + rx * C;
      Matrix6 out;
      out.topLeftCorner<3, 3>() = A + rx * B.transpose() - top_right * rx;
      out.topRightCorner<3, 3>() = top_right;
      out.bottomLeftCorner<3, 3>() = top_right.transpose();
      out.bottomRightCorner<3, 3>() = C;
      return out;
    }

    /// X M X^T for a symmetric 6x6 M mapping forces to motions (an inverse
    /// inertia) expressed in parent coordinates; result in child coordinates.
    inline Matrix6 motion_congruence(const PlueckerTransform & X, const Matrix6 & M)
    {
      flops::add(414);
      const Matrix3 & E = X.rotation;
      const Matrix3 rx = skew(X.translation);
      // T = [1 0; -rx 1], X = diag(E,E) T ;  T M T^T then rotate.
      const Matrix3 A = M.topLeftCorner<3, 3>();
      const Matrix3 B = M.topRightCorner<3, 3>();
      const Matrix3 C = M.bottomRightCorner<3, 3>();
      const Matrix3 B2 = B + A * rx;
      const Matrix3 C2 = C - rx * B2 + B.transpose() * rx;
      Matrix6 out;
      out.topLeftCorner<3, 3>() = E * A * E.transpose();
      out.topRightCorner<3, 3>() = E * B2 * E.transpose();
      out.bottomLeftCorner<3, 3>() = out.topRightCorner<3, 3>().transpose();
      out.bottomRightCorner<3, 3>() = E * C2 * E.transpose();
      return out;
    }

    /// rows * X for a row-block of motion covectors (m x 6), i.e. the rows
    /// pulled back to parent coordinates. Equivalent to (X^T rows^T)^T.
    template<typename Rows>
    inline void rows_times_transform(const PlueckerTransform & X, const Rows & in, Eigen::Ref<Eigen::Matrix<double, Eigen::Dynamic, 6>> out)
    {
      flops::add(42 * static_cast<std::uint64_t>(in.rows()));
      const Matrix3 & E = X.rotation;
      const Matrix3 rx = skew(X.translation);
      // [a b] [E 0; -E rx E] = [a E - b E rx, b E]
      const auto bE = (in.template rightCols<3>() * E).eval();
      out.template rightCols<3>() = bE;
      out.template leftCols<3>() = in.template leftCols<3>() * E - bE * rx;
    }
  } // namespace detail

  inline SpatialForce apply_inertia(const SpatialInertia & I, const SpatialMotion & v) { return I.apply(v); }

  inline SpatialForce apply_inertia(const ArticulatedInertia & I, const SpatialMotion & v)
  {
    flops::add(66);
    return SpatialForce(Vector6(I.matrix * v.vector()));
  }

  /// Congruence X^T I X: moves an articulated inertia from child to parent
  /// coordinates.
  inline ArticulatedInertia transform_inertia(const PlueckerTransform & X, const ArticulatedInertia & I)
  {
    return ArticulatedInertia(detail::congruence(X, I.matrix));
  }

  /// Rotation by `angle` about unit `axis` (active, right-handed).
  inline Matrix3 rotation_about(const Vector3 & axis, double angle)
  {
    return Eigen::AngleAxisd(angle, axis).toRotationMatrix();
  }

  /// One Newton step towards the polar factor; keeps R orthonormal under
  /// repeated integration updates.
  inline Matrix3 orthonormalize(const Matrix3 & R)
  {
    return 0.5 * R * (3.0 * Matrix3::Identity() - R.transpose() * R);
  }

} // namespace pvdyn
