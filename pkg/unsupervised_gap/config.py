import copy
import math

from unsupervised_gap.gap import GapError

# Speed of light in m/s.
SPEED_OF_LIGHT = 3e8


class ConfigError(GapError, ValueError):
    pass


def db_to_linear(db):
    return 10.0**(db / 10.0)


def dbm_to_watts(dbm):
    return 10.0**((dbm - 30.0) / 10.0)


def default_quota(n_users, n_bs):
    """Twice the even share `ceil(n_users / n_bs)`, at most `n_users`. When
    `n_users` is a multiple of `n_bs`, the even share fills every BS in every
    feasible assignment."""
    return min(n_users, 2 * math.ceil(n_users / n_bs))


class NetworkConfig(object):
    """Parameters of the two-tier RF/THz downlink network.

    Defaults are the reference settings for 4 users and 4 BSs. Values
    without a reference setting (tier split, quota, side lobes, beamwidths,
    minimum distance) are documented in DESIGN.md."""

    PER_USER_OTHER_BS = 'per_user_other_bs'
    AS_PRINTED_ALL_PAIRS = 'as_printed_all_pairs'
    interference_modes = (PER_USER_OTHER_BS, AS_PRINTED_ALL_PAIRS)

    def __init__(self):
        self.n_users = 4
        self.n_bs = 4
        self.n_rf_bs = 2
        self.n_thz_bs = 2
        self.radius = 100.0
        self.f_rf = 2.1e9
        self.f_thz = 1.0e12
        self.alpha = 2.5
        self.k_abs = 0.05
        self.p_rf = 1.0
        self.p_thz = 1.0
        self.g_tx_max_db = 25.0
        self.g_rx_max_db = 25.0
        self.g_tx_min_db = 0.0
        self.g_rx_min_db = 0.0
        self.beamwidth_tx = math.radians(30)
        self.beamwidth_rx = math.radians(30)
        # Gain of each end of an RF link; omnidirectional antennas.
        self.rf_gain_db = 0.0
        self.noise_power_dbm = -70.0
        # 1 normalizes rates to bits/s/Hz.
        self.bandwidth = 1.0
        self.min_distance = 1.0
        # `None` means `default_quota(n_users, n_bs)`.
        self.bs_quota = None
        self.interference_mode = NetworkConfig.PER_USER_OTHER_BS

    default = None  # This will be set later in this file.

    def clone(self):
        return copy.deepcopy(self)

    def for_scenario(self, n_users, n_bs, n_rf_bs=None):
        """Returns a copy for `n_users` users and `n_bs` BSs. Unless
        specified, the lower half of the BSs are RF and the rest are THz."""
        clone = self.clone()
        clone.n_users = n_users
        clone.n_bs = n_bs
        clone.n_rf_bs = n_bs // 2 if n_rf_bs is None else n_rf_bs
        clone.n_thz_bs = n_bs - clone.n_rf_bs
        clone.bs_quota = None
        return clone

    @property
    def quota(self):
        if self.bs_quota is not None:
            return self.bs_quota
        return default_quota(self.n_users, self.n_bs)

    @property
    def gamma_rf(self):
        return (SPEED_OF_LIGHT / (4 * math.pi * self.f_rf))**2

    @property
    def gamma_thz(self):
        return (SPEED_OF_LIGHT / (4 * math.pi * self.f_thz))**2

    @property
    def noise_power(self):
        """N0 in watts."""
        return dbm_to_watts(self.noise_power_dbm)

    @property
    def f_tx(self):
        """Probability that a transmitter points its main lobe at a user."""
        return self.beamwidth_tx / (2 * math.pi)

    @property
    def f_rx(self):
        return self.beamwidth_rx / (2 * math.pi)

    @property
    def rf_gain(self):
        return db_to_linear(self.rf_gain_db)**2

    @property
    def thz_max_gain(self):
        """G_tx^max * G_rx^max, the gain of an aligned THz link."""
        return db_to_linear(self.g_tx_max_db + self.g_rx_max_db)

    def validate(self):
        def require(condition, message):
            if not condition:
                raise ConfigError(message)

        require(self.n_users >= 1, f'n_users must be >= 1: {self.n_users}')
        require(self.n_bs >= 1, f'n_bs must be >= 1: {self.n_bs}')
        require(
            self.n_rf_bs >= 0 and self.n_thz_bs >= 0
            and self.n_rf_bs + self.n_thz_bs == self.n_bs,
            f'n_rf_bs={self.n_rf_bs} + n_thz_bs={self.n_thz_bs} '
            f'must equal n_bs={self.n_bs}')
        require(self.radius > self.min_distance > 0,
                f'Requires radius > min_distance > 0: '
                f'{self.radius}, {self.min_distance}')
        require(self.f_rf > 0 and self.f_thz > 0,
                'Frequencies must be positive')
        require(self.alpha > 0, f'alpha must be positive: {self.alpha}')
        require(self.k_abs >= 0, f'k_abs must be non-negative: {self.k_abs}')
        require(self.p_rf >= 0 and self.p_thz >= 0,
                'Transmit powers must be non-negative')
        require(0 < self.f_tx < 1 and 0 < self.f_rx < 1,
                'Beamwidths must be in (0, 2*pi)')
        require(self.bandwidth > 0,
                f'bandwidth must be positive: {self.bandwidth}')
        require(self.quota >= 1, f'bs_quota must be >= 1: {self.quota}')
        require(self.n_bs * self.quota >= self.n_users,
                f'{self.n_bs} BSs with quota {self.quota} cannot serve '
                f'{self.n_users} users')
        require(self.interference_mode in NetworkConfig.interference_modes,
                f'Unknown interference mode "{self.interference_mode}"')
        return self

    def to_dict(self):
        values = dict(vars(self))
        values['bs_quota'] = self.quota
        return values

    @staticmethod
    def from_dict(values):
        config = NetworkConfig()
        for key, value in values.items():
            if not hasattr(config, key):
                raise ConfigError(f'Unknown network parameter "{key}"')
            setattr(config, key, value)
        return config

    def __str__(self):
        return (f'{self.n_users} users, {self.n_bs} BSs '
                f'({self.n_rf_bs} RF + {self.n_thz_bs} THz), '
                f'quota={self.quota}')


NetworkConfig.default = NetworkConfig()


class LossConfig(object):
    """Weights of the penalty terms in the unsupervised loss."""

    CORRECTED = 'corrected'
    AS_PRINTED = 'as_printed'
    penalty_signs = (CORRECTED, AS_PRINTED)

    def __init__(self,
                 lambda_=6.0,
                 lambda1=None,
                 lambda2=None,
                 penalty_sign=CORRECTED):
        self.lambda_ = lambda_
        # The equality weight is the simplified weight unless given.
        self.lambda1 = lambda_ if lambda1 is None else lambda1
        self.lambda2 = lambda_ if lambda2 is None else lambda2
        self.penalty_sign = penalty_sign
        self.validate()

    def validate(self):
        for name in ('lambda_', 'lambda1', 'lambda2'):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise ConfigError(f'{name} must be finite and non-negative, '
                                  f'got {value}')
        if self.penalty_sign not in LossConfig.penalty_signs:
            raise ConfigError(f'Unknown penalty sign "{self.penalty_sign}"')
        return self

    @staticmethod
    def parse_penalty_sign(value):
        """Accepts the CLI spelling `printed` as well."""
        if value == 'printed':
            return LossConfig.AS_PRINTED
        return value


class TrainConfig(object):
    """Hyperparameters of the unsupervised training loop. Defaults are the
    reference settings for 4 users and 4 BSs."""

    def __init__(self):
        self.lambda_ = 6.0
        self.learning_rate = 1e-4
        self.epochs = 50
        self.batch_size = 128
        self.layer_dims = [16, 64, 128, 256, 512, 1024, 2048, 16]
        self.seed = 0
        self.normalize_features = True
        self.penalty_sign = LossConfig.CORRECTED
        self.beta1 = 0.9
        self.beta2 = 0.999
        self.eps_adam = 1e-8

    default = None  # This will be set later in this file.

    def clone(self):
        return copy.deepcopy(self)

    def for_scenario(self, n_users, n_bs):
        """Returns a copy with the reference settings for the scenario. Sizes
        without reference settings keep the 4-user hidden layers."""
        clone = self.clone()
        size = n_users * n_bs
        if (n_users, n_bs) == (16, 4):
            clone.epochs = 100
            clone.lambda_ = 10.0
            hidden = [128, 256, 512, 1024, 2048, 2048, 4096, 4096]
        else:
            hidden = TrainConfig.default.layer_dims[1:-1]
        clone.layer_dims = [size] + list(hidden) + [size]
        return clone

    def with_values(self, **kwargs):
        """Returns a copy with the given attributes replaced."""
        clone = self.clone()
        for key, value in kwargs.items():
            if not hasattr(clone, key):
                raise ConfigError(f'Unknown training parameter "{key}"')
            setattr(clone, key, value)
        return clone

    def loss_config(self):
        return LossConfig(lambda_=self.lambda_, penalty_sign=self.penalty_sign)

    def validate(self):
        if self.epochs < 1:
            raise ConfigError(f'epochs must be >= 1: {self.epochs}')
        if self.batch_size < 1:
            raise ConfigError(f'batch_size must be >= 1: {self.batch_size}')
        if not self.learning_rate >= 0:
            raise ConfigError(
                f'learning_rate must be non-negative: {self.learning_rate}')
        if len(self.layer_dims) < 2 or any(d < 1 for d in self.layer_dims):
            raise ConfigError(f'Invalid layer_dims: {self.layer_dims}')
        self.loss_config()
        return self

    def to_dict(self):
        values = dict(vars(self))
        values['lambda'] = values.pop('lambda_')
        values['layer_dims'] = list(self.layer_dims)
        return values

    def __str__(self):
        return (f'lambda={self.lambda_} lr={self.learning_rate} '
                f'epochs={self.epochs} batch={self.batch_size} '
                f'dims={self.layer_dims} seed={self.seed}')


TrainConfig.default = TrainConfig()


class Scenario(object):
    """The two reference networks, with their dataset sizes."""

    def __init__(self, name, n_users, n_bs, n_train, n_test=1000):
        self.name = name
        self.n_users = n_users
        self.n_bs = n_bs
        self.n_train = n_train
        self.n_test = n_test

    def network_config(self):
        return NetworkConfig.default.for_scenario(self.n_users, self.n_bs)

    def train_config(self):
        return TrainConfig.default.for_scenario(self.n_users, self.n_bs)

    @staticmethod
    def get(name):
        scenario = Scenario.all.get(name)
        if scenario is None:
            raise ConfigError(f'Unknown scenario "{name}", '
                              f'choose from {sorted(Scenario.all)}')
        return scenario

    all = {}  # This will be set later in this file.


Scenario.all = {
    '4x4': Scenario('4x4', 4, 4, n_train=10000),
    '16x4': Scenario('16x4', 16, 4, n_train=16000),
}
