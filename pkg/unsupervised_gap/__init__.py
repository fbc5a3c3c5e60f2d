from unsupervised_gap.config import *
from unsupervised_gap.dataset import *
from unsupervised_gap.dump import *
from unsupervised_gap.gap import *
from unsupervised_gap.log_utils import *
from unsupervised_gap.loss import *
from unsupervised_gap.network import *
from unsupervised_gap.oracle import *
from unsupervised_gap.sweep import *
from unsupervised_gap.trainer import *
from unsupervised_gap.wireless import *
