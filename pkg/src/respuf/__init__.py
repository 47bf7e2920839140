"""Simulation and tooling for a resistor-divider PUF built from the internal
pull-up and pull-down resistors of ten microcontroller I/O pins.

The pipeline runs device model -> measurement -> response -> fuzzy extractor
-> key -> encrypted channel, with metrics and sweeps on the side.
"""

from .bch import BchCode, BchParams, bch_decode, bch_encode
from .crypto import SecretKey, derive_key, ecb_decrypt, ecb_encrypt, pkcs7_pad, pkcs7_unpad, sha256
from .device_model import DeviceInstance, Environment, PopulationModel, PullKind, resistance_at, sample_population
from .errors import (ChannelError, CsvParseError, EmptyPopulationError, HelperFormatError, PaddingError,
                     RegenerationError)
from .fuzzy_extractor import HelperBundle, PufId, enroll, regenerate
from .measurement import AdcConfig, ReadingSet, acquire, divider_voltage, parse_reading_csv, quantize
from .metrics import MetricReport, bit_aliasing, hamming, reliability, uniformity, uniqueness
from .response import PufResponse, ResponseConfig, generate_response, response_for_config

__version__ = "0.1.0"
