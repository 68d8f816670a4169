#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace tabletop {

struct Vec3 {
  double x = 0, y = 0, z = 0;
  Vec3() = default;
  Vec3(double X, double Y, double Z) : x(X), y(Y), z(Z) {}
  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  Vec3 cross(const Vec3& o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
  double norm() const { return std::sqrt(dot(*this)); }
  Vec3 normalized() const {
    double n = norm();
    return {x / n, y / n, z / n};
  }
};

struct Quat {
  double w = 1, x = 0, y = 0, z = 0;
  double norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }
  Quat normalized() const {
    double n = norm();
    return {w / n, x / n, y / n, z / n};
  }
  // Non-negative scalar part.
  Quat canonical() const {
    if (w < 0) return {-w, -x, -y, -z};
    return *this;
  }
};

// Pinhole camera. Camera frame: X right, Y down, Z forward (into the scene).
// Rows of R are the camera axes expressed in world coordinates.
struct Camera {
  double fx = 0, fy = 0, cx = 0, cy = 0;
  int width = 0, height = 0;
  Vec3 eye;
  std::array<double, 9> R{};  // row-major

  static Camera look_at(Vec3 eye, Vec3 center, Vec3 up_hint, int width, int height,
                        double focal) {
    Camera c;
    c.eye = eye;
    c.width = width;
    c.height = height;
    c.fx = c.fy = focal;
    c.cx = (width - 1) * 0.5;
    c.cy = (height - 1) * 0.5;
    Vec3 fwd = (center - eye).normalized();
    Vec3 right = fwd.cross(up_hint);
    if (right.norm() < 1e-9) throw std::invalid_argument("look_at: degenerate up hint");
    right = right.normalized();
    Vec3 down = fwd.cross(right);  // Y = Z x X keeps the basis right-handed
    c.R = {right.x, right.y, right.z, down.x, down.y, down.z, fwd.x, fwd.y, fwd.z};
    return c;
  }

  Vec3 world_to_cam(const Vec3& p) const {
    Vec3 d = p - eye;
    return {R[0] * d.x + R[1] * d.y + R[2] * d.z,
            R[3] * d.x + R[4] * d.y + R[5] * d.z,
            R[6] * d.x + R[7] * d.y + R[8] * d.z};
  }
  Vec3 cam_to_world(const Vec3& pc) const {
    return {R[0] * pc.x + R[3] * pc.y + R[6] * pc.z + eye.x,
            R[1] * pc.x + R[4] * pc.y + R[7] * pc.z + eye.y,
            R[2] * pc.x + R[5] * pc.y + R[8] * pc.z + eye.z};
  }

  // Returns (u, v, depth); depth <= 0 means behind the camera.
  std::array<double, 3> project(const Vec3& p) const {
    Vec3 pc = world_to_cam(p);
    if (pc.z <= 1e-9) return {0, 0, pc.z};
    return {fx * pc.x / pc.z + cx, fy * pc.y / pc.z + cy, pc.z};
  }

  Vec3 backproject(double u, double v, double depth) const {
    Vec3 pc{(u - cx) / fx * depth, (v - cy) / fy * depth, depth};
    return cam_to_world(pc);
  }

  // World-space ray direction through pixel center (u=col, v=row).
  Vec3 pixel_ray(double u, double v) const {
    Vec3 pc{(u - cx) / fx, (v - cy) / fy, 1.0};
    Vec3 d = {R[0] * pc.x + R[3] * pc.y + R[6] * pc.z,
              R[1] * pc.x + R[4] * pc.y + R[7] * pc.z,
              R[2] * pc.x + R[5] * pc.y + R[8] * pc.z};
    return d.normalized();
  }
};

struct CameraRig {
  std::vector<Camera> cams;
  int count() const { return static_cast<int>(cams.size()); }

  // Fixed 3-camera rig: top-down, left, right.
  static CameraRig standard(int height, int width) {
    double f = static_cast<double>(width);
    CameraRig rig;
    rig.cams.push_back(Camera::look_at({0, 0, 1.1}, {0, 0, 0}, {0, 1, 0}, width, height, f));
    rig.cams.push_back(
        Camera::look_at({-0.85, 0, 0.6}, {0, 0, 0.03}, {0, 0, 1}, width, height, f));
    rig.cams.push_back(
        Camera::look_at({0.85, 0, 0.6}, {0, 0, 0.03}, {0, 0, 1}, width, height, f));
    return rig;
  }
};

}  // namespace tabletop
