"""
Unit tests for obstacle shadowing propagation.

Run with: pytest tests/unit/test_propagation.py -v -m unit
"""

import math
from decimal import Decimal, localcontext

import numpy as np
import pytest

from v2x_shadow_sim.config import ChannelParams
from v2x_shadow_sim.exceptions import DomainError
from v2x_shadow_sim.geometry import AntennaPoint, Footprint, Point2
from v2x_shadow_sim.propagation import (
    WALL_LOSS_DB,
    DiffractionParams,
    building_penetration_loss,
    free_space_loss,
    fresnel_nu,
    knife_edge_loss,
    link_budget,
    packet_success_probability,
)
from v2x_shadow_sim.scenario import Building

pytestmark = [pytest.mark.unit, pytest.mark.propagation]


def reference_knife_edge(nu: float) -> float:
    if nu <= 0:
        return 0.0
    return 6.9 + 20.0 * math.log10(math.sqrt((nu - 0.1) ** 2 + 1.0) + nu - 0.1)


def exact_nu(h: float, wavelength: float, d1: float, d2: float) -> Decimal:
    """Fresnel parameter evaluated with 50 significant digits."""
    with localcontext() as ctx:
        ctx.prec = 50
        h, wavelength, d1, d2 = (Decimal(float(v)) for v in (h, wavelength, d1, d2))
        return h * ((1 / wavelength) * (1 / d1 + 1 / d2)).sqrt()


def exact_knife_edge(nu: Decimal) -> Decimal:
    with localcontext() as ctx:
        ctx.prec = 50
        if nu <= 0:
            return Decimal(0)
        shifted = nu - Decimal("0.1")
        return Decimal("6.9") + 20 * ((shifted * shifted + 1).sqrt() + shifted).log10()


class TestKnifeEdge:
    """Tests for fresnel_nu and knife_edge_loss."""

    def test_loss_at_nu_0_1(self):
        """The curve passes through 6.9 dB at nu = 0.1."""
        assert knife_edge_loss(0.1) == pytest.approx(6.9, abs=1e-9)

    def test_no_loss_at_or_below_line(self):
        assert knife_edge_loss(0.0) == 0.0
        assert knife_edge_loss(-1.5) == 0.0

    def test_fresnel_nu_example(self):
        """h=1, wavelength=0.05, d1=d2=10 gives nu = sqrt(20 * 0.2) = 2."""
        assert fresnel_nu(1.0, 0.05, 10.0, 10.0) == pytest.approx(2.0)

    def test_fresnel_nu_domain(self):
        with pytest.raises(DomainError):
            fresnel_nu(1.0, 0.05, 0.0, 10.0)
        with pytest.raises(DomainError):
            fresnel_nu(1.0, -0.05, 10.0, 10.0)

    def test_matches_high_precision_evaluation(self):
        """Vectorized evaluation agrees with 50-digit decimal arithmetic on random geometries."""
        rng = np.random.default_rng(2024)
        h = rng.uniform(-3.0, 5.0, 1000)
        d1 = rng.uniform(1.0, 200.0, 1000)
        d2 = rng.uniform(1.0, 200.0, 1000)
        wavelength = ChannelParams().wavelength

        nu = fresnel_nu(h, wavelength, d1, d2)
        losses = knife_edge_loss(nu)
        for index in range(1000):
            expected_nu = exact_nu(h[index], wavelength, d1[index], d2[index])
            assert nu[index] == pytest.approx(float(expected_nu), rel=1e-9, abs=1e-12)
            assert losses[index] == pytest.approx(float(exact_knife_edge(expected_nu)), rel=1e-9, abs=1e-12)

    def test_large_vehicle_shadow_range(self):
        """A 4 m truck between car antennas costs 15-25 dB in the vast majority of geometries."""
        rng = np.random.default_rng(7)
        wavelength = ChannelParams().wavelength
        count = 2000
        d1 = rng.uniform(10.0, 50.0, count)
        d2 = rng.uniform(10.0, 50.0, count)
        tx = rng.uniform(1.5, 1.9, count)
        rx = rng.uniform(1.5, 1.9, count)
        line = tx + (rx - tx) * d1 / (d1 + d2)

        losses = knife_edge_loss(fresnel_nu(4.0 - line, wavelength, d1, d2))
        in_range = np.mean((losses >= 15.0) & (losses <= 25.0))
        assert in_range >= 0.95

    def test_diffraction_params(self):
        params = DiffractionParams.from_geometry(1.0, 0.05, 10.0, 10.0)
        assert params.nu == pytest.approx(2.0)
        assert params.loss == pytest.approx(reference_knife_edge(2.0))


class TestLossTerms:
    """Tests for free-space and building losses."""

    def test_free_space_zero_at_reference(self):
        """20*log10(4*pi*d/lambda) vanishes when d = lambda / (4*pi)."""
        assert free_space_loss(1.0, 4.0 * math.pi) == pytest.approx(0.0, abs=1e-12)

    @pytest.mark.parametrize(("distance", "expected"), [(1.0, 47.86), (100.0, 87.86)])
    def test_free_space_at_5_9_ghz(self, channel, distance, expected):
        assert free_space_loss(distance, channel.wavelength) == pytest.approx(expected, abs=0.01)

    def test_free_space_twenty_db_per_decade(self, channel):
        for distance in np.geomspace(0.5, 5000.0, 25):
            step = free_space_loss(10.0 * distance, channel.wavelength) - free_space_loss(distance, channel.wavelength)
            assert step == pytest.approx(20.0, abs=1e-9)

    def test_free_space_domain(self):
        with pytest.raises(DomainError):
            free_space_loss(0.0, 0.05)

    def test_building_loss_is_exact_multiple(self):
        assert building_penetration_loss(2) == WALL_LOSS_DB * 2
        assert building_penetration_loss(0) == 0.0

    def test_negative_crossings_rejected(self):
        with pytest.raises(DomainError):
            building_penetration_loss(-1)


class TestLinkBudget:
    """Tests for link_budget decomposition."""

    def test_building_walls(self, make_world, channel):
        """A block straddling the link adds two walls."""
        world = make_world(buildings=[Building(Footprint.rect(4.0, -5.0, 6.0, 5.0, 10.0))])
        tx = AntennaPoint(Point2(0.0, 0.0), 1.5)
        rx = AntennaPoint(Point2(10.0, 0.0), 1.5)

        budget = link_budget(tx, rx, world, channel)

        assert budget.building_loss == pytest.approx(2 * WALL_LOSS_DB)
        assert budget.vehicle_losses == ()
        assert budget.rx_power == pytest.approx(channel.tx_power - free_space_loss(10.0, channel.wavelength) - 19.2)

    def test_truck_diffraction(self, make_world, make_vehicle, channel):
        """A truck across the link contributes exactly one knife-edge term."""
        truck = make_vehicle(10, 5.0, 0.0, math.pi / 2, body="truck")
        world = make_world([truck])
        tx = AntennaPoint(Point2(0.0, 0.0), 1.5)
        rx = AntennaPoint(Point2(10.0, 0.0), 1.5)

        budget = link_budget(tx, rx, world, channel)

        expected = knife_edge_loss(fresnel_nu(4.0 - 1.5, channel.wavelength, 5.0, 5.0))
        assert len(budget.vehicle_losses) == 1
        assert budget.vehicle_losses[0][0] == 10
        assert budget.vehicle_losses[0][1] == pytest.approx(expected)
        assert budget.total_loss == pytest.approx(budget.fspl + expected)

    def test_line_of_sight_at_100_m(self, make_world, channel):
        budget = link_budget(AntennaPoint(Point2(0, 0), 1.5), AntennaPoint(Point2(100, 0), 1.5), make_world(), channel)
        assert budget.total_loss == budget.fspl
        assert budget.rx_power == pytest.approx(-61.86, abs=0.01)

    def test_reciprocal_for_equal_antennas(self, make_world, make_vehicle, channel):
        """Swapping transmitter and receiver leaves the received power unchanged."""
        rng = np.random.default_rng(31)
        for _ in range(200):
            trucks = [
                make_vehicle(10 + i, float(x), float(y), float(heading), body="truck")
                for i, (x, y, heading) in enumerate(
                    zip(rng.uniform(5, 45, 3), rng.uniform(-6, 6, 3), rng.uniform(0, math.pi, 3))
                )
            ]
            x0, y0 = float(rng.uniform(10, 30)), float(rng.uniform(-8, 2))
            world = make_world(trucks, buildings=[Building(Footprint.rect(x0, y0, x0 + 8.0, y0 + 6.0, 10.0))])
            height = float(rng.uniform(1.5, 2.5))
            tx = AntennaPoint(Point2(0.0, float(rng.uniform(-5, 5))), height)
            rx = AntennaPoint(Point2(50.0, float(rng.uniform(-5, 5))), height)

            forward = link_budget(tx, rx, world, channel)
            backward = link_budget(rx, tx, world, channel)
            assert backward.rx_power == pytest.approx(forward.rx_power, rel=1e-9)
            assert [i for i, _ in backward.vehicle_losses] == [i for i, _ in forward.vehicle_losses]
            expected = [loss for _, loss in forward.vehicle_losses]
            assert [loss for _, loss in backward.vehicle_losses] == pytest.approx(expected, rel=1e-9)

    def test_obstacles_never_raise_power(self, make_world, make_vehicle, channel):
        rng = np.random.default_rng(32)
        tx = AntennaPoint(Point2(0.0, 0.0), 1.6)
        rx = AntennaPoint(Point2(40.0, 0.0), 1.6)
        vehicles = []
        previous = link_budget(tx, rx, make_world(), channel).rx_power
        for vehicle_id in range(30):
            x, y = rng.uniform(8, 32), rng.uniform(-3, 3)
            vehicles.append(make_vehicle(vehicle_id, float(x), float(y), float(rng.uniform(0, math.pi)), body="truck"))
            current = link_budget(tx, rx, make_world(vehicles), channel).rx_power
            assert current <= previous
            previous = current

    def test_distance_never_raises_power(self, make_world, channel):
        world = make_world()
        powers = [
            link_budget(AntennaPoint(Point2(0, 0), 1.5), AntennaPoint(Point2(d, 0), 1.5), world, channel).rx_power
            for d in np.linspace(1.0, 1000.0, 200)
        ]
        assert all(later < earlier for earlier, later in zip(powers, powers[1:]))

    def test_excluded_vehicle_ignored(self, make_world, make_vehicle, channel):
        truck = make_vehicle(10, 5.0, 0.0, math.pi / 2, body="truck")
        world = make_world([truck])
        tx = AntennaPoint(Point2(0.0, 0.0), 1.5)
        rx = AntennaPoint(Point2(10.0, 0.0), 1.5)

        budget = link_budget(tx, rx, world, channel, exclude_ids={10})
        assert budget.vehicle_loss == 0.0

    def test_losses_sorted_by_id(self, make_world, make_vehicle, channel):
        first = make_vehicle(30, 20.0, 0.0, math.pi / 2, body="truck")
        second = make_vehicle(11, 10.0, 0.0, math.pi / 2, body="bus", height=3.0)
        world = make_world([first, second])
        budget = link_budget(AntennaPoint(Point2(0, 0), 1.5), AntennaPoint(Point2(30, 0), 1.5), world, channel)
        assert [vehicle_id for vehicle_id, _ in budget.vehicle_losses] == [11, 30]


class TestPacketSuccess:
    """Tests for the logistic packet success curve."""

    def test_half_at_sensitivity(self, channel):
        assert packet_success_probability(channel.receiver_sensitivity, channel) == pytest.approx(0.5)

    def test_monotonic_and_vectorized(self, channel):
        probabilities = packet_success_probability(np.array([-110.0, -94.0, -80.0]), channel)
        assert probabilities.shape == (3,)
        assert probabilities[0] < probabilities[1] < probabilities[2]
        assert probabilities[2] > 0.999
