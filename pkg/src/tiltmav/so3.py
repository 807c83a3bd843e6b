"""Rotation utilities: skew/vee maps, axis rotations, exponential/log maps.

All rotation matrices are body-to-world ("R_WB" style): for a vector x
expressed in the body frame, R @ x gives its world-frame coordinates.
"""

from __future__ import annotations

import numpy as np

ORTHONORMALITY_TOL = 1e-9


def skew(v) -> np.ndarray:
    """Skew-symmetric matrix of a 3-vector, so that skew(v) @ w == cross(v, w)."""
    x, y, z = np.asarray(v, dtype=float)
    return np.array([[0.0, -z, y],
                     [z, 0.0, -x],
                     [-y, x, 0.0]])


def vee(m, tol: float = ORTHONORMALITY_TOL) -> np.ndarray:
    """Inverse of skew. Raises ValueError if the input is not antisymmetric."""
    m = np.asarray(m, dtype=float)
    if m.shape != (3, 3):
        raise ValueError(f"vee expects a 3x3 matrix, got {m.shape}")
    asym = np.abs(m + m.T).max()
    if asym > tol * max(1.0, np.abs(m).max()):
        raise ValueError(f"vee: input not antisymmetric (residual {asym:.3e})")
    return np.array([m[2, 1], m[0, 2], m[1, 0]])


def rot_x(a: float) -> np.ndarray:
    c, s = np.cos(a), np.sin(a)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(a: float) -> np.ndarray:
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(a: float) -> np.ndarray:
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def exp_so3(phi) -> np.ndarray:
    """Rodrigues formula: rotation matrix for the axis-angle vector phi."""
    phi = np.asarray(phi, dtype=float)
    angle = np.linalg.norm(phi)
    if angle < 1e-12:
        k = skew(phi)
        return np.eye(3) + k + 0.5 * (k @ k)
    axis = phi / angle
    k = skew(axis)
    return np.eye(3) + np.sin(angle) * k + (1.0 - np.cos(angle)) * (k @ k)


def log_so3(r) -> np.ndarray:
    """Axis-angle vector of a rotation matrix (principal branch, angle in [0, pi])."""
    r = np.asarray(r, dtype=float)
    cos_angle = np.clip((np.trace(r) - 1.0) / 2.0, -1.0, 1.0)
    angle = np.arccos(cos_angle)
    if angle < 1e-10:
        return vee(0.5 * (r - r.T), tol=1.0)
    if np.pi - angle < 1e-6:
        # Near pi the antisymmetric part vanishes; recover the axis from R + I.
        m = 0.5 * (r + np.eye(3))
        axis = np.sqrt(np.clip(np.diag(m), 0.0, None))
        # Fix signs from off-diagonal terms, anchored on the largest component.
        k = int(np.argmax(axis))
        signs = np.sign(m[k, :])
        signs[signs == 0.0] = 1.0
        axis = axis * signs / np.linalg.norm(axis)
        return angle * axis
    return angle / (2.0 * np.sin(angle)) * np.array(
        [r[2, 1] - r[1, 2], r[0, 2] - r[2, 0], r[1, 0] - r[0, 1]])


def is_rotation(r, tol: float = ORTHONORMALITY_TOL) -> bool:
    r = np.asarray(r, dtype=float)
    if r.shape != (3, 3):
        return False
    ortho = np.abs(r.T @ r - np.eye(3)).max()
    return ortho <= tol and abs(np.linalg.det(r) - 1.0) <= tol


def project_to_so3(r) -> np.ndarray:
    """Nearest rotation matrix (polar decomposition via SVD)."""
    u, _, vt = np.linalg.svd(np.asarray(r, dtype=float))
    d = np.sign(np.linalg.det(u @ vt))
    return u @ np.diag([1.0, 1.0, d]) @ vt


def attitude_error(r_wb, r_wb_des) -> np.ndarray:
    """Geometric attitude error 0.5 * vee(Rd^T R - R^T Rd), in the body frame."""
    r = np.asarray(r_wb, dtype=float)
    rd = np.asarray(r_wb_des, dtype=float)
    m = rd.T @ r - r.T @ rd
    return 0.5 * np.array([m[2, 1], m[0, 2], m[1, 0]])


def random_rotation(rng: np.random.Generator, max_angle: float = np.pi) -> np.ndarray:
    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    return exp_so3(axis * rng.uniform(0.0, max_angle))
