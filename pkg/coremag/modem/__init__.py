# Ce fichier indique que le répertoire modem est un package Python
from coremag.modem.receiver import DemodConfig, demodulate, locate_frames  # noqa: F401
from coremag.modem.schemes import (  # noqa: F401
    CoreSchedule, ModulationConfig, Scheme, frame_duration_ms, modulate, modulate_frames,
    symbol_duration_ms,
)
