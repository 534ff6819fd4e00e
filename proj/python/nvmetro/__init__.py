# Copyright 2026 The nvmetro Authors
# SPDX-License-Identifier: Apache-2.0
"""Phase metrology with nuclear spins of a single NV center."""

from ._core import *  # noqa: F401,F403
from ._core import __version__  # noqa: F401
