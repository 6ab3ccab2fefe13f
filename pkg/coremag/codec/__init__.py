# Ce fichier indique que le répertoire codec est un package Python
from coremag.codec.framing import (  # noqa: F401
    FRAME_BITS, PAYLOAD_BITS, PREAMBLE, BitFrame, BitStream, Payload,
    bytes_from_payloads, chunk_bytes, deframe, frame, frames_from_bytes,
    frames_to_stream, parity_of, split_frames,
)
