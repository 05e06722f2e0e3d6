import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scenewarp.camera import (
    Pose,
    TrajectorySpec,
    backproject,
    build_trajectory,
    make_intrinsics,
    project,
    relative_transform,
)
from scenewarp.errors import BehindCamera, InvalidConfig, InvalidDepth


def rand_pose(rng):
    # QR of a random matrix gives a uniform-ish rotation
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return Pose(q.T, rng.normal(size=3))


class TestMakeIntrinsics:
    def test_right_angle_fov(self):
        k = make_intrinsics(90.0, 160, 96)
        assert k.fx == pytest.approx(80.0, abs=1e-12)
        assert k.fy == k.fx
        assert k.cx == 80.0
        assert k.cy == 48.0

    def test_sixty_degree_fov(self):
        k = make_intrinsics(60.0, 720, 480)
        # 360 / tan(30 deg), evaluated independently
        assert k.fx == pytest.approx(623.5382907247958, rel=1e-12)

    def test_fov_boundaries_rejected(self):
        with pytest.raises(InvalidConfig):
            make_intrinsics(180.0, 160, 96)
        with pytest.raises(InvalidConfig):
            make_intrinsics(0.0, 160, 96)


class TestProjection:
    def setup_method(self):
        self.k = make_intrinsics(90.0, 160, 96)

    def test_principal_ray(self):
        p = backproject((self.k.cx, self.k.cy), 2.0, self.k)
        assert np.allclose(p, [0.0, 0.0, 2.0], atol=1e-12)
        px, z = project([0.0, 0.0, 2.0], self.k)
        assert np.allclose(px, [self.k.cx, self.k.cy])
        assert z == 2.0

    def test_one_focal_length_off_axis(self):
        # pixel one focal length right of center at depth 3 lifts to x = z
        p = backproject((self.k.cx + self.k.fx, self.k.cy), 3.0, self.k)
        assert np.allclose(p, [3.0, 0.0, 3.0], atol=1e-12)

    def test_unit_offset_projection(self):
        px, z = project([1.0, 0.0, 1.0], self.k)
        assert px[0] == pytest.approx(160.0, abs=1e-12)
        assert px[1] == pytest.approx(self.k.cy, abs=1e-12)
        assert z == 1.0

    def test_behind_camera(self):
        with pytest.raises(BehindCamera):
            project([0.0, 0.0, -1.0], self.k)
        with pytest.raises(BehindCamera):
            project([0.0, 0.0, 0.0], self.k)

    def test_nonpositive_depth(self):
        with pytest.raises(InvalidDepth):
            backproject((10.0, 10.0), 0.0, self.k)

    @given(
        u=st.floats(0.0, 159.0),
        v=st.floats(0.0, 95.0),
        z=st.floats(0.05, 500.0),
    )
    @settings(max_examples=200, deadline=None)
    def test_roundtrip(self, u, v, z):
        k = make_intrinsics(70.0, 160, 96)
        px, zz = project(backproject((u, v), z, k), k)
        assert abs(px[0] - u) < 1e-9
        assert abs(px[1] - v) < 1e-9
        assert abs(zz - z) < 1e-9


class TestTrajectory:
    def test_orbit_pose_count(self):
        k = make_intrinsics(60.0, 160, 96)
        net = build_trajectory(TrajectorySpec(kind="orbit-arc", num_views=25), k)
        assert len(net) == 25

    def test_single_view(self):
        k = make_intrinsics(60.0, 160, 96)
        net = build_trajectory(TrajectorySpec(kind="orbit-arc", num_views=1), k, base_fraction=0.0)
        assert len(net) == 1
        assert net.base_index == 0

    def test_lateral_spacing(self):
        k = make_intrinsics(60.0, 160, 96)
        net = build_trajectory(
            TrajectorySpec(kind="lateral-line", num_views=3, baseline=0.5), k
        )
        centers = [p.center for p in net.poses]
        assert np.linalg.norm(centers[1] - centers[0]) == pytest.approx(0.25, abs=1e-12)
        assert np.linalg.norm(centers[2] - centers[1]) == pytest.approx(0.25, abs=1e-12)
        # collinear: cross product of the two segment vectors vanishes
        seg1 = centers[1] - centers[0]
        seg2 = centers[2] - centers[0]
        assert np.linalg.norm(np.cross(seg1, seg2)) < 1e-12

    def test_orbit_orthonormality(self):
        k = make_intrinsics(60.0, 160, 96)
        net = build_trajectory(
            TrajectorySpec(kind="orbit-arc", num_views=9, radius=2.0, total_angle=60.0), k
        )
        for p in net.poses:
            assert np.max(np.abs(p.rotation.T @ p.rotation - np.eye(3))) < 1e-9
            assert abs(np.linalg.det(p.rotation) - 1.0) < 1e-9

    def test_orbit_cameras_aim_at_target(self):
        k = make_intrinsics(60.0, 160, 96)
        look = (0.5, -0.2, 3.0)
        net = build_trajectory(
            TrajectorySpec(kind="orbit-arc", num_views=7, radius=2.0, total_angle=50.0, look_at=look), k
        )
        for p in net.poses:
            cam_pt = p.apply(np.asarray(look))
            assert abs(cam_pt[0]) < 1e-9
            assert abs(cam_pt[1]) < 1e-9
            assert cam_pt[2] == pytest.approx(2.0, abs=1e-9)

    def test_custom_list_length_mismatch(self):
        k = make_intrinsics(60.0, 160, 96)
        with pytest.raises(InvalidConfig):
            build_trajectory(
                TrajectorySpec(kind="custom-list", num_views=3, poses=(Pose.identity(),)), k
            )

    def test_base_fraction_rounding(self):
        k = make_intrinsics(60.0, 160, 96)
        net = build_trajectory(TrajectorySpec(kind="orbit-arc", num_views=25), k, base_fraction=0.5)
        assert net.base_index == 12


class TestRelativeTransform:
    def test_identity(self):
        rng = np.random.default_rng(7)
        for _ in range(10):
            p = rand_pose(rng)
            rel = relative_transform(p, p)
            assert np.max(np.abs(rel.rotation - np.eye(3))) < 1e-9
            assert np.max(np.abs(rel.translation)) < 1e-9

    def test_pure_translation(self):
        # two identity-rotation cameras separated by d in world x
        pa = Pose(np.eye(3), np.zeros(3))
        d = np.array([0.7, 0.0, 0.0])
        pb = Pose(np.eye(3), -d)  # center at +d
        rel = relative_transform(pa, pb)
        # a world point expressed in camera a maps to the same point minus d
        x_world = np.array([0.3, -0.2, 4.0])
        in_a = pa.apply(x_world)
        in_b = pb.apply(x_world)
        mapped = rel.rotation @ in_a + rel.translation
        assert np.allclose(mapped, in_b, atol=1e-12)
        assert np.allclose(rel.translation, -d, atol=1e-12)

    def test_composition(self):
        rng = np.random.default_rng(21)
        for _ in range(20):
            pi, pj, pk = rand_pose(rng), rand_pose(rng), rand_pose(rng)
            ab = relative_transform(pi, pj)
            bc = relative_transform(pj, pk)
            ac = relative_transform(pi, pk)
            rot = bc.rotation @ ab.rotation
            t = bc.rotation @ ab.translation + bc.translation
            assert np.max(np.abs(rot - ac.rotation)) < 1e-9
            assert np.max(np.abs(t - ac.translation)) < 1e-9


class TestPoseValidation:
    def test_rejects_non_orthonormal(self):
        bad = np.eye(3)
        bad[0, 1] = 1e-3
        with pytest.raises(InvalidConfig):
            Pose(bad, np.zeros(3))

    def test_rejects_reflection(self):
        refl = np.diag([1.0, 1.0, -1.0])
        with pytest.raises(InvalidConfig):
            Pose(refl, np.zeros(3))

    def test_matrix4_roundtrip(self):
        rng = np.random.default_rng(3)
        p = rand_pose(rng)
        q = Pose.from_matrix4(p.matrix4)
        assert np.allclose(q.rotation, p.rotation, atol=1e-15)
        assert np.allclose(q.translation, p.translation, atol=1e-15)
