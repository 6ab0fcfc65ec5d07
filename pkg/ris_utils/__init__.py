from .converters import *
from .exceptions import *
from .resources import csv_schema, plots
from .time import Timer
