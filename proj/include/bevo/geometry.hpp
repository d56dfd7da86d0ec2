#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace bevo {

// Frame conventions used throughout:
//   camera: x right, y down, z forward (standard pinhole)
//   ego:    x forward, y left, z up; yaw positive counterclockwise
// Relative poses are "pose of the later frame expressed in the earlier
// frame's ego coordinates", so trajectory accumulation is a left-fold of
// se2_compose.

struct CameraIntrinsics {
    double fx = 0.0, fy = 0.0;
    double cx = 0.0, cy = 0.0;
    int width = 0, height = 0;

    void validate() const;  // throws std::invalid_argument
};

struct CameraExtrinsics {
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();  // camera -> ego
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();   // camera origin in ego, meters

    void validate() const;  // orthonormality within 1e-9
};

struct CameraRig {
    CameraIntrinsics intrinsics;
    CameraExtrinsics extrinsics;
};

struct SE2Pose {
    double tx = 0.0;
    double ty = 0.0;
    double theta = 0.0;  // radians, normalized to (-pi, pi]
};

struct SE3Pose {
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();
};

// Normalizes an angle into (-pi, pi].
double normalize_angle(double theta);

// Backprojects a pixel at the given depth into the camera frame.
// Throws std::invalid_argument for non-positive depth.
Eigen::Vector3d pinhole_backproject(double u, double v, double depth,
                                    const CameraIntrinsics& intr);

// Projects a camera-frame point to pixel coordinates (u, v).
// Throws std::invalid_argument if the point is at or behind the camera plane.
Eigen::Vector2d pinhole_project(const Eigen::Vector3d& point_cam,
                                const CameraIntrinsics& intr);

Eigen::Vector3d cam_to_ego(const Eigen::Vector3d& point_cam,
                           const CameraExtrinsics& extr);

SE2Pose se2_compose(const SE2Pose& a, const SE2Pose& b);
SE2Pose se2_inverse(const SE2Pose& a);

SE3Pose se2_to_se3(const SE2Pose& pose);
SE2Pose se3_to_se2(const SE3Pose& pose);

SE3Pose se3_compose(const SE3Pose& a, const SE3Pose& b);
SE3Pose se3_inverse(const SE3Pose& a);

// Recovers the yaw from an (unnormalized) cos/sin pair; result in (-pi, pi].
// Throws std::invalid_argument on a zero-norm input.
double yaw_from_cos_sin(double c, double s);

}  // namespace bevo
