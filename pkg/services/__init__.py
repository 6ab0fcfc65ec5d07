from .cache import BaseCache, LocalCache
from .channel_gen import ChannelGenerator, link_rng, linear_gain, path_loss_db, rayleigh
from .follower import FollowerService
from .leader import *
from .oracle import *
from .experiments import *
from . import metrics
