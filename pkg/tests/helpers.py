"""Shared scene builders for the test suite."""

from bdris.scene import Scenario, angle_at_bs, angle_at_ris


def unit_scene(**overrides) -> Scenario:
    """Hand-built consistent geometric scene with O(1) gain."""
    base = dict(
        n_bs=4,
        n_r=4,
        theta=angle_at_ris((0.0, 0.0), (1.0, -2.0)),
        phi_r=angle_at_ris((0.0, 0.0), (-1.5, -2.5)),
        phi_bs=angle_at_bs((-1.5, -2.5), (0.0, 0.0)),
        alpha=0.3 - 0.4j,
        reference_gain=1.0,
        ris_pos=(0.0, 0.0),
        bs_pos=(-1.5, -2.5),
    )
    base.update(overrides)
    return Scenario(**base)
