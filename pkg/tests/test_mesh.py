import numpy as np
import pytest

from tetnewton.mesh import (
    Bend,
    Compress,
    HalfSpaceSelect,
    MeshParseError,
    Shear,
    Stretch,
    TetMesh,
    Translate,
    Twist,
    apply_initial_deformation,
    apply_transform,
    edge_matrices,
    generate_beam,
    load_tetgen,
    save_tetgen,
    select_vertices,
    signed_volumes,
)

# ============================================================
# Beam generation
# ============================================================


class TestGenerateBeam:
    def test_unit_cube(self):
        mesh = generate_beam(1, 1, 1, (1.0, 1.0, 1.0))
        assert mesh.num_vertices == 8
        assert mesh.num_tets == 6
        assert mesh.rest_volume.sum() == pytest.approx(1.0, rel=1e-12)

    def test_two_cells(self):
        mesh = generate_beam(2, 1, 1, (2.0, 1.0, 1.0))
        assert mesh.num_vertices == 12
        assert mesh.num_tets == 12
        assert mesh.rest_volume.sum() == pytest.approx(2.0, rel=1e-12)

    def test_acceptance_beam(self):
        mesh = generate_beam(4, 4, 12, (1.0, 1.0, 3.0))
        assert mesh.num_tets == 4 * 4 * 12 * 6 == 1152
        vols = signed_volumes(mesh.rest_positions, mesh.tets)
        assert (vols > 0).all()
        cell_volume = (1.0 / 4) * (1.0 / 4) * (3.0 / 12)
        assert vols.min() == pytest.approx(cell_volume / 6.0, rel=1e-12)
        assert vols.sum() == pytest.approx(3.0, rel=1e-10)

    def test_invalid_arguments(self):
        with pytest.raises(ValueError):
            generate_beam(0, 1, 1, (1, 1, 1))
        with pytest.raises(ValueError):
            generate_beam(1, 1, 1, (1, 0, 1))
        with pytest.raises(ValueError):
            generate_beam(1, 1, 1, (1, 1, -2))

    def test_precomputed_element_data(self):
        mesh = generate_beam(2, 2, 2, (1.0, 2.0, 0.5))
        dm = edge_matrices(mesh.rest_positions, mesh.tets)
        # volume formula consistency: rest_volume = det(Dm) / 6
        np.testing.assert_allclose(
            mesh.rest_volume, np.linalg.det(dm) / 6.0, rtol=1e-12
        )
        prod = mesh.rest_shape_inv @ dm
        eye = np.broadcast_to(np.eye(3), prod.shape)
        assert np.abs(prod - eye).max() < 1e-12


# ============================================================
# TetGen parsing
# ============================================================

NODE_5 = """# five vertices
5 3 0 0
0  0.0 0.0 0.0
1  1.0 0.0 0.0
2  0.0 1.0 0.0
3  0.0 0.0 1.0
4  1.0 1.0 1.0
"""

ELE_2 = """2 4 0
0  0 1 2 3
1  1 2 3 4
"""


class TestLoadTetgen:
    def test_hand_written_pair(self):
        mesh = load_tetgen(NODE_5, ELE_2)
        assert mesh.num_vertices == 5
        assert mesh.num_tets == 2
        vols = signed_volumes(mesh.rest_positions, mesh.tets)
        assert (vols > 0).all()
        # oracle: direct determinant on the first tet's hand-picked corners
        d = np.array([[1, 0, 0], [0, 1, 0], [0, 0, 1]], dtype=float).T
        assert vols.sum() == pytest.approx(
            abs(np.linalg.det(d)) / 6 + vols[1], rel=1e-12
        )

    def test_one_based_equals_zero_based(self):
        node1 = NODE_5.replace("\n0  ", "\n1  ").replace("\n1  1.0", "\n9  1.0")
        # simpler: shift all indices by one explicitly
        node1 = "5 3 0 0\n" + "\n".join(
            f"{i + 1} {line.split(maxsplit=1)[1]}"
            for i, line in enumerate(
                l for l in NODE_5.splitlines()[2:] if l.strip()
            )
        )
        ele1 = "2 4 0\n1 1 2 3 4\n2 2 3 4 5\n"
        a = load_tetgen(NODE_5, ELE_2)
        b = load_tetgen(node1, ele1)
        np.testing.assert_array_equal(a.tets, b.tets)
        np.testing.assert_allclose(a.rest_positions, b.rest_positions)

    def test_negative_volume_reordered(self):
        ele_flipped = "2 4 0\n0 1 0 2 3\n1 1 2 3 4\n"
        mesh = load_tetgen(NODE_5, ele_flipped)
        assert (signed_volumes(mesh.rest_positions, mesh.tets) > 0).all()

    def test_repeated_vertex_is_parse_error(self):
        bad = "1 4 0\n0 0 1 1 3\n"
        with pytest.raises(MeshParseError, match="line 2"):
            load_tetgen(NODE_5, bad)

    def test_degenerate_tet_names_line(self):
        node = "4 3 0 0\n0 0 0 0\n1 1 0 0\n2 0 1 0\n3 0.5 0.5 0\n"  # coplanar
        ele = "1 4 0\n0 0 1 2 3\n"
        with pytest.raises(MeshParseError, match="line 2"):
            load_tetgen(node, ele)

    def test_malformed_header(self):
        with pytest.raises(MeshParseError):
            load_tetgen("x y\n", ELE_2)
        with pytest.raises(MeshParseError, match="dimension"):
            load_tetgen("5 2 0 0\n", ELE_2)

    def test_index_out_of_range(self):
        ele = "1 4 0\n0 0 1 2 9\n"
        with pytest.raises(MeshParseError, match="9"):
            load_tetgen(NODE_5, ele)

    def test_comments_ignored(self):
        node = "# header comment\n" + NODE_5.replace("1.0 0.0 0.0", "1.0 0.0 0.0 # v1")
        mesh = load_tetgen(node, ELE_2)
        assert mesh.num_vertices == 5

    def test_round_trip(self, rng):
        mesh = generate_beam(2, 3, 2, (1.0, 1.5, 0.7))
        node_text, ele_text = save_tetgen(mesh)
        back = load_tetgen(node_text, ele_text)
        np.testing.assert_array_equal(back.tets, mesh.tets)
        assert np.abs(back.rest_positions - mesh.rest_positions).max() < 1e-12


# ============================================================
# Vertex selection
# ============================================================


class TestSelectVertices:
    def test_unit_cube_faces(self):
        mesh = generate_beam(1, 1, 1, (1.0, 1.0, 1.0))
        lo = select_vertices(mesh, HalfSpaceSelect("x", "le", 0.0 + 1e-9))
        hi = select_vertices(mesh, HalfSpaceSelect("x", "ge", 1.0 - 1e-9))
        assert len(lo) == 4 and len(hi) == 4
        assert (mesh.rest_positions[lo, 0] == 0.0).all()
        assert (mesh.rest_positions[hi, 0] == 1.0).all()

    def test_beam_top_layer(self):
        mesh = generate_beam(4, 4, 12, (1.0, 1.0, 3.0))
        top = select_vertices(mesh, HalfSpaceSelect("z", "ge", 0.98))
        assert len(top) == 25
        assert (mesh.rest_positions[top, 2] == 3.0).all()

    def test_validation(self):
        with pytest.raises(ValueError):
            HalfSpaceSelect("w", "le", 0.5)
        with pytest.raises(ValueError):
            HalfSpaceSelect("x", "lt", 0.5)
        with pytest.raises(ValueError):
            HalfSpaceSelect("x", "le", -0.1)


# ============================================================
# Initial deformations
# ============================================================


class TestTransforms:
    def test_stretch_triples_x(self):
        mesh = generate_beam(1, 1, 1, (1.0, 1.0, 1.0))
        handles = select_vertices(mesh, HalfSpaceSelect("x", "ge", 1.0 - 1e-9))
        initial, targets = apply_initial_deformation(
            mesh, Stretch("x", 3.0), handles
        )
        np.testing.assert_allclose(initial[:, 0], 3.0 * mesh.rest_positions[:, 0])
        np.testing.assert_allclose(initial[:, 1:], mesh.rest_positions[:, 1:])
        assert targets.shape == (4, 3)
        assert (targets[:, 0] == 3.0).all()

    def test_identity_stretch_is_rest(self):
        mesh = generate_beam(2, 2, 2, (1.0, 1.0, 1.0))
        initial, _ = apply_initial_deformation(mesh, Stretch("x", 1.0), [0])
        np.testing.assert_array_equal(initial, mesh.rest_positions)

    def test_twist_quarter_turn(self):
        mesh = generate_beam(1, 1, 1, (1.0, 1.0, 1.0))
        moved = apply_transform(mesh.rest_positions, Twist("z", 90.0))
        idx_top = np.where(
            (mesh.rest_positions == [1.0, 0.0, 1.0]).all(axis=1)
        )[0][0]
        idx_bot = np.where(
            (mesh.rest_positions == [1.0, 0.0, 0.0]).all(axis=1)
        )[0][0]
        np.testing.assert_allclose(moved[idx_top], [0.0, 1.0, 1.0], atol=1e-12)
        np.testing.assert_allclose(moved[idx_bot], [1.0, 0.0, 0.0], atol=1e-12)

    def test_stretch_composition(self, rng):
        p = rng.uniform(0, 2, size=(40, 3))
        ab = apply_transform(apply_transform(p, Stretch("y", 1.7)), Stretch("y", 0.4))
        direct = apply_transform(p, Stretch("y", 1.7 * 0.4))
        assert np.abs(ab - direct).max() < 1e-12

    def test_compress_is_stretch(self, rng):
        p = rng.uniform(0, 2, size=(25, 3))
        np.testing.assert_array_equal(
            apply_transform(p, Compress("z", 0.5)),
            apply_transform(p, Stretch("z", 0.5)),
        )

    def test_translate(self, rng):
        p = rng.uniform(-1, 1, size=(10, 3))
        moved = apply_transform(p, Translate((1.0, -2.0, 0.5)))
        np.testing.assert_allclose(moved, p + np.array([1.0, -2.0, 0.5]))

    def test_shear_ramps_with_normalized_coordinate(self):
        # displacement reaches `amount` exactly at the far end of along_axis
        p = np.array([[0.0, 0.0, 0.0], [0.0, 0.0, 2.0], [1.0, 1.0, 1.0]])
        moved = apply_transform(p, Shear("x", "z", 0.5))
        np.testing.assert_allclose(moved[:, 0], p[:, 0] + 0.5 * (p[:, 2] / 2.0))

    def test_bend_rotates_far_end(self):
        # quarter bend about y: the far-z face rotates by 90 degrees in xz
        p = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
        moved = apply_transform(p, Bend("z", "y", 90.0))
        np.testing.assert_allclose(moved[0], [0, 0, 0], atol=1e-12)
        np.testing.assert_allclose(moved[1], [1, 0, 0], atol=1e-12)  # t = 0 plane
        # the point at t=1 rotates: (x,z)=(0,1) -> (1,0) about +y
        np.testing.assert_allclose(moved[2], [1.0, 0.0, 0.0], atol=1e-12)

    def test_validation(self):
        with pytest.raises(ValueError):
            Stretch("x", 0.0)
        with pytest.raises(ValueError):
            Twist("x", np.inf)
        with pytest.raises(ValueError):
            Shear("x", "x", 0.1)
        with pytest.raises(ValueError):
            Bend("z", "z", 10.0)

    def test_handle_out_of_range(self):
        mesh = generate_beam(1, 1, 1, (1.0, 1.0, 1.0))
        with pytest.raises(ValueError):
            apply_initial_deformation(mesh, Stretch("x", 2.0), [99])


# ============================================================
# TetMesh validation
# ============================================================


class TestTetMesh:
    def test_rejects_bad_indices(self):
        pos = np.eye(3, 3)
        with pytest.raises(ValueError):
            TetMesh.from_arrays(pos, [[0, 1, 2, 3]])

    def test_rejects_repeated_vertex(self):
        pos = np.vstack([np.zeros(3), np.eye(3)])
        with pytest.raises(ValueError, match="repeated"):
            TetMesh.from_arrays(pos, [[0, 1, 1, 2]])

    def test_rejects_negative_volume(self):
        pos = np.vstack([np.zeros(3), np.eye(3)])
        with pytest.raises(ValueError, match="oriented"):
            TetMesh.from_arrays(pos, [[0, 2, 1, 3]])
