from .channels import *
from .config import *
from .geometry import *
from .strategies import *
