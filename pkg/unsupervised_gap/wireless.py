#!/usr/bin/env python3
import argparse
import asyncio
import concurrent.futures
import logging
import math
import pathlib
import time

import numpy as np

from unsupervised_gap.config import ConfigError
from unsupervised_gap.config import NetworkConfig
from unsupervised_gap.config import Scenario
from unsupervised_gap.config import db_to_linear
from unsupervised_gap.dataset import Dataset
from unsupervised_gap.log_utils import init_logging

logger = logging.getLogger('wireless')

RF = 'RF'
THZ = 'THz'

# Attempts to place a user at least `min_distance` away from every BS.
_MAX_RESAMPLES = 10000


def example_rng(seed, index):
    """The random stream of one example, independent of all others."""
    return np.random.default_rng([seed, index])


def sample_disc(rng, n, radius):
    """Samples `n` points uniformly over the area of a disc."""
    r = radius * np.sqrt(rng.random(n))
    theta = 2 * math.pi * rng.random(n)
    return np.stack([r * np.cos(theta), r * np.sin(theta)], axis=-1)


def distances_between(points_a, points_b):
    return np.linalg.norm(points_a[:, None, :] - points_b[None, :, :],
                          axis=-1)


class NetworkRealization(object):
    """One snapshot of the network: positions, fading and beam alignment.
    The first `n_rf_bs` BSs are RF; the rest are THz."""

    def __init__(self, user_positions, bs_positions, tiers, rf_fading,
                 alignment_gains, distances):
        self.user_positions = user_positions
        self.bs_positions = bs_positions
        self.tiers = tuple(tiers)
        self.rf_fading = rf_fading
        self.alignment_gains = alignment_gains
        self.distances = distances

    @property
    def n_users(self):
        return self.user_positions.shape[0]

    @property
    def rf_columns(self):
        return [j for j, tier in enumerate(self.tiers) if tier == RF]

    @property
    def thz_columns(self):
        return [j for j, tier in enumerate(self.tiers) if tier == THZ]


def sample_topology(cfg, seed):
    """Samples users and BSs uniformly in the disc, the RF fading and the
    beam alignment of every THz link. `seed` is an int or a sequence of ints
    accepted by `np.random.default_rng`, or a `np.random.Generator`."""
    rng = (seed if isinstance(seed, np.random.Generator) else
           np.random.default_rng(seed))
    bs_positions = sample_disc(rng, cfg.n_bs, cfg.radius)
    user_positions = sample_disc(rng, cfg.n_users, cfg.radius)
    for i in range(cfg.n_users):
        for _ in range(_MAX_RESAMPLES):
            d = np.linalg.norm(bs_positions - user_positions[i], axis=-1)
            if np.all(d >= cfg.min_distance):
                break
            user_positions[i] = sample_disc(rng, 1, cfg.radius)[0]
        else:
            raise ConfigError(f'Could not place user {i} at least '
                              f'{cfg.min_distance} m from every BS')
    tiers = [RF] * cfg.n_rf_bs + [THZ] * cfg.n_thz_bs
    rf_fading = rng.exponential(1.0, size=(cfg.n_users, cfg.n_rf_bs))
    alignment_gains = draw_alignment_gain(rng,
                                          cfg,
                                          size=(cfg.n_users, cfg.n_thz_bs))
    distances = distances_between(user_positions, bs_positions)
    return NetworkRealization(user_positions, bs_positions, tiers, rf_fading,
                              alignment_gains, distances)


def rf_channel_power(distance, fading, cfg):
    """h = gamma_R * distance^-alpha * fading."""
    return cfg.gamma_rf * np.power(distance, -cfg.alpha) * fading


def thz_channel_power(distance, cfg):
    """h = gamma_T * exp(-k_a * distance) / distance^2, line of sight."""
    return cfg.gamma_thz * np.exp(-cfg.k_abs * distance) / np.square(distance)


def alignment_outcomes(cfg):
    """The four `(gain, probability)` pairs of an interfering THz link:
    max/max, max/min, min/max and min/min lobes at (tx, rx)."""
    g_tx = (db_to_linear(cfg.g_tx_max_db), db_to_linear(cfg.g_tx_min_db))
    g_rx = (db_to_linear(cfg.g_rx_max_db), db_to_linear(cfg.g_rx_min_db))
    p_tx = (cfg.f_tx, 1 - cfg.f_tx)
    p_rx = (cfg.f_rx, 1 - cfg.f_rx)
    return tuple((g_tx[a] * g_rx[b], p_tx[a] * p_rx[b]) for a in (0, 1)
                 for b in (0, 1))


def draw_alignment_gain(rng, cfg, size=None):
    """Draws the beam alignment gain D of interfering THz links. Each end
    points its main lobe independently with probability F = beamwidth/2pi."""
    tx_main = rng.random(size) < cfg.f_tx
    rx_main = rng.random(size) < cfg.f_rx
    g_tx = np.where(tx_main, db_to_linear(cfg.g_tx_max_db),
                    db_to_linear(cfg.g_tx_min_db))
    g_rx = np.where(rx_main, db_to_linear(cfg.g_rx_max_db),
                    db_to_linear(cfg.g_rx_min_db))
    gains = g_tx * g_rx
    if size is None:
        return float(gains)
    return gains


def _interference(received, mode):
    """Aggregate interference for each (user, BS) of one tier, given the
    (users, BSs) matrix of received powers on interfering links."""
    if mode == NetworkConfig.PER_USER_OTHER_BS:
        # Every other BS of the tier, as seen by the same user.
        return received.sum(axis=1, keepdims=True) - received
    assert mode == NetworkConfig.AS_PRINTED_ALL_PAIRS
    # Every (user, BS) pair of the tier but the link itself.
    return received.sum() - received


def sinr_matrix(real, cfg):
    """Linear SINR of every (user, BS) link. Tiers use disjoint bands, so
    interference only comes from the same tier."""
    noise = cfg.noise_power
    sinr = np.zeros(real.distances.shape)
    rf = real.rf_columns
    if rf:
        received = cfg.p_rf * cfg.rf_gain * rf_channel_power(
            real.distances[:, rf], real.rf_fading, cfg)
        interference = _interference(received, cfg.interference_mode)
        sinr[:, rf] = received / (noise + interference)
    thz = real.thz_columns
    if thz:
        h = thz_channel_power(real.distances[:, thz], cfg)
        # The serving link is aligned; interfering links are random.
        signal = cfg.p_thz * cfg.thz_max_gain * h
        interfering = cfg.p_thz * real.alignment_gains * h
        interference = _interference(interfering, cfg.interference_mode)
        sinr[:, thz] = signal / (noise + interference)
    return sinr


def rate_from_sinr(sinr, bandwidth=1.0):
    return bandwidth * np.log2(1.0 + np.asarray(sinr))


def rate_matrix(real, cfg):
    """Achievable rate of every link; bits/s/Hz when the bandwidth is 1."""
    return rate_from_sinr(sinr_matrix(real, cfg), cfg.bandwidth)


def _generate_rates(cfg, seed, start, stop):
    return np.stack([
        rate_matrix(sample_topology(cfg, example_rng(seed, index)), cfg)
        for index in range(start, stop)
    ])


class DatasetGenerator(object):
    """Generates user-association GAP datasets. Example `k` is drawn from its
    own stream `(seed, k)`, so chunks can be generated in any order."""

    def __init__(self, config=NetworkConfig.default):
        self.config = config.clone().validate()

    def generate(self, n_examples, seed):
        if n_examples <= 0:
            raise ValueError(f'n_examples must be positive: {n_examples}')
        rates = _generate_rates(self.config, seed, 0, n_examples)
        return self._to_dataset(rates, seed)

    async def generate_async(self, n_examples, seed, jobs=1, chunk_size=500):
        """Same as `generate`, with chunks run in `jobs` processes."""
        if n_examples <= 0:
            raise ValueError(f'n_examples must be positive: {n_examples}')
        if jobs <= 1:
            return self.generate(n_examples, seed)
        loop = asyncio.get_running_loop()
        ranges = [(start, min(start + chunk_size, n_examples))
                  for start in range(0, n_examples, chunk_size)]
        with concurrent.futures.ProcessPoolExecutor(jobs) as executor:
            chunks = await asyncio.gather(*(loop.run_in_executor(
                executor, _generate_rates, self.config, seed, start, stop)
                                            for start, stop in ranges))
        return self._to_dataset(np.concatenate(chunks), seed)

    def _to_dataset(self, rates, seed):
        cfg = self.config
        n = rates.shape[0]
        logger.info('Generated %d examples: %s', n, cfg)
        weights = np.ones_like(rates)
        capacities = np.full((n, cfg.n_bs), float(cfg.quota))
        return Dataset.from_arrays(rates,
                                   weights,
                                   capacities,
                                   config=cfg.to_dict(),
                                   seed=seed)

    @staticmethod
    def config_from_args(args):
        if args.scenario:
            config = Scenario.get(args.scenario).network_config()
        else:
            config = NetworkConfig.default.clone()
        if args.users is not None or args.bs is not None:
            config = config.for_scenario(
                args.users if args.users is not None else config.n_users,
                args.bs if args.bs is not None else config.n_bs)
        overrides = {
            'n_rf_bs': args.rf_bs,
            'n_thz_bs': args.thz_bs,
            'bs_quota': args.quota,
            'radius': args.radius,
            'f_rf': args.f_rf,
            'f_thz': args.f_thz,
            'alpha': args.alpha,
            'k_abs': args.k_abs,
            'p_rf': args.p_rf,
            'p_thz': args.p_thz,
            'noise_power_dbm': args.noise_dbm,
            'bandwidth': args.bandwidth,
            'min_distance': args.min_distance,
            'interference_mode': args.interference,
        }
        for key, value in overrides.items():
            if value is not None:
                setattr(config, key, value)
        if args.rf_bs is not None and args.thz_bs is None:
            config.n_thz_bs = config.n_bs - config.n_rf_bs
        elif args.thz_bs is not None and args.rf_bs is None:
            config.n_rf_bs = config.n_bs - config.n_thz_bs
        if args.g_max_db is not None:
            config.g_tx_max_db = config.g_rx_max_db = args.g_max_db
        if args.g_min_db is not None:
            config.g_tx_min_db = config.g_rx_min_db = args.g_min_db
        if args.beamwidth_deg is not None:
            config.beamwidth_tx = config.beamwidth_rx = math.radians(
                args.beamwidth_deg)
        return config.validate()

    @staticmethod
    async def main():
        parser = argparse.ArgumentParser(prog='unsupervised-gap gen-data')
        parser.add_argument("--scenario",
                            choices=sorted(Scenario.all),
                            help="start from the settings of a scenario.")
        parser.add_argument("--users", type=int, help="number of users (I).")
        parser.add_argument("--bs", type=int, help="number of BSs (J).")
        parser.add_argument("--rf-bs", type=int, help="number of RF BSs.")
        parser.add_argument("--thz-bs", type=int, help="number of THz BSs.")
        parser.add_argument("--quota",
                            type=int,
                            help="maximum users per BS (default:"
                            " 2 * ceil(users / BSs), at most users).")
        parser.add_argument("--n",
                            type=int,
                            help="number of examples"
                            " (default: the scenario's training size).")
        parser.add_argument("--seed", type=int, default=0)
        parser.add_argument("-o",
                            "--out",
                            type=pathlib.Path,
                            required=True,
                            help="output dataset file.")
        parser.add_argument("--radius", type=float, help="meters.")
        parser.add_argument("--f-rf", type=float, help="RF carrier in Hz.")
        parser.add_argument("--f-thz", type=float, help="THz carrier in Hz.")
        parser.add_argument("--alpha", type=float, help="path-loss exponent.")
        parser.add_argument("--k-abs",
                            type=float,
                            help="molecular absorption coefficient in 1/m.")
        parser.add_argument("--p-rf", type=float, help="RF power in W.")
        parser.add_argument("--p-thz", type=float, help="THz power in W.")
        parser.add_argument("--g-max-db",
                            type=float,
                            help="THz main-lobe gain of each end in dB.")
        parser.add_argument("--g-min-db",
                            type=float,
                            help="THz side-lobe gain of each end in dB.")
        parser.add_argument("--beamwidth-deg",
                            type=float,
                            help="THz main-lobe beamwidth in degrees.")
        parser.add_argument("--noise-dbm", type=float, help="N0 in dBm.")
        parser.add_argument("--bandwidth", type=float, help="W in Hz.")
        parser.add_argument("--min-distance", type=float, help="meters.")
        parser.add_argument("--interference",
                            choices=NetworkConfig.interference_modes)
        parser.add_argument("-j",
                            "--jobs",
                            type=int,
                            default=1,
                            help="number of processes.")
        parser.add_argument("-v",
                            "--verbose",
                            help="increase output verbosity.",
                            action="count",
                            default=0)
        args = parser.parse_args()
        init_logging(args.verbose, main=logger)
        config = DatasetGenerator.config_from_args(args)
        n = args.n
        if n is None:
            n = (Scenario.get(args.scenario).n_train
                 if args.scenario else 10000)
        generator = DatasetGenerator(config)
        dataset = await generator.generate_async(n, args.seed, jobs=args.jobs)
        dataset.save(args.out)


def generate_dataset(cfg, n_examples, seed):
    return DatasetGenerator(cfg).generate(n_examples, seed)


if __name__ == '__main__':
    start_time = time.time()
    asyncio.run(DatasetGenerator.main())
    elapsed = time.time() - start_time
    logger.info(f'Elapsed {elapsed:.2f}s')
