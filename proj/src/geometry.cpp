#include "bevo/geometry.hpp"

#include <cmath>
#include <stdexcept>

namespace bevo {

namespace {
constexpr double kOrthoTol = 1e-9;
}

void CameraIntrinsics::validate() const {
    if (!(fx > 0.0) || !(fy > 0.0)) {
        throw std::invalid_argument("intrinsics: focal lengths must be positive");
    }
    if (!(cx > 0.0 && cx < static_cast<double>(width))) {
        throw std::invalid_argument("intrinsics: cx outside image");
    }
    if (!(cy > 0.0 && cy < static_cast<double>(height))) {
        throw std::invalid_argument("intrinsics: cy outside image");
    }
}

void CameraExtrinsics::validate() const {
    const Eigen::Matrix3d gram = rotation.transpose() * rotation;
    if ((gram - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > kOrthoTol) {
        throw std::invalid_argument("extrinsics: rotation not orthonormal");
    }
    if (std::abs(rotation.determinant() - 1.0) > kOrthoTol) {
        throw std::invalid_argument("extrinsics: rotation determinant != 1");
    }
}

double normalize_angle(double theta) {
    double t = std::fmod(theta + M_PI, 2.0 * M_PI);
    if (t <= 0.0) t += 2.0 * M_PI;
    return t - M_PI;
}

Eigen::Vector3d pinhole_backproject(double u, double v, double depth,
                                    const CameraIntrinsics& intr) {
    if (!(depth > 0.0)) {
        throw std::invalid_argument("pinhole_backproject: depth must be positive");
    }
    return {depth * (u - intr.cx) / intr.fx, depth * (v - intr.cy) / intr.fy, depth};
}

Eigen::Vector2d pinhole_project(const Eigen::Vector3d& p, const CameraIntrinsics& intr) {
    if (!(p.z() > 0.0)) {
        throw std::invalid_argument("pinhole_project: point not in front of camera");
    }
    return {intr.fx * p.x() / p.z() + intr.cx, intr.fy * p.y() / p.z() + intr.cy};
}

Eigen::Vector3d cam_to_ego(const Eigen::Vector3d& point_cam, const CameraExtrinsics& extr) {
    return extr.rotation * point_cam + extr.translation;
}

SE2Pose se2_compose(const SE2Pose& a, const SE2Pose& b) {
    const double c = std::cos(a.theta);
    const double s = std::sin(a.theta);
    SE2Pose r;
    r.tx = a.tx + c * b.tx - s * b.ty;
    r.ty = a.ty + s * b.tx + c * b.ty;
    r.theta = normalize_angle(a.theta + b.theta);
    return r;
}

SE2Pose se2_inverse(const SE2Pose& a) {
    const double c = std::cos(a.theta);
    const double s = std::sin(a.theta);
    SE2Pose r;
    r.tx = -(c * a.tx + s * a.ty);
    r.ty = -(-s * a.tx + c * a.ty);
    r.theta = normalize_angle(-a.theta);
    return r;
}

SE3Pose se2_to_se3(const SE2Pose& pose) {
    SE3Pose out;
    const double c = std::cos(pose.theta);
    const double s = std::sin(pose.theta);
    out.rotation << c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0;
    out.translation = {pose.tx, pose.ty, 0.0};
    return out;
}

SE2Pose se3_to_se2(const SE3Pose& pose) {
    SE2Pose out;
    out.tx = pose.translation.x();
    out.ty = pose.translation.y();
    out.theta = std::atan2(pose.rotation(1, 0), pose.rotation(0, 0));
    return out;
}

SE3Pose se3_compose(const SE3Pose& a, const SE3Pose& b) {
    SE3Pose r;
    r.rotation = a.rotation * b.rotation;
    r.translation = a.rotation * b.translation + a.translation;
    return r;
}

SE3Pose se3_inverse(const SE3Pose& a) {
    SE3Pose r;
    r.rotation = a.rotation.transpose();
    r.translation = -(a.rotation.transpose() * a.translation);
    return r;
}

double yaw_from_cos_sin(double c, double s) {
    const double n = std::sqrt(c * c + s * s);
    if (!(n > 0.0)) {
        throw std::invalid_argument("yaw_from_cos_sin: zero-norm (cos, sin) pair");
    }
    return normalize_angle(std::atan2(s / n, c / n));
}

}  // namespace bevo
