"""Serialisation of kaclab records."""

from .records import (
    matrix_envelope,
    read_matrix_csv,
    read_spec,
    read_trace,
    read_update_sequence,
    report_payload,
    spec_digest,
    spec_from_payload,
    spec_payload,
    trace_frame,
    trace_from_frame,
    update_sequence_frame,
    update_sequence_from_frame,
    write_json,
    write_matrix_csv,
    write_spec,
    write_trace,
    write_update_sequence,
)

__all__ = [
    "matrix_envelope",
    "read_matrix_csv",
    "read_spec",
    "read_trace",
    "read_update_sequence",
    "report_payload",
    "spec_digest",
    "spec_from_payload",
    "spec_payload",
    "trace_frame",
    "trace_from_frame",
    "update_sequence_frame",
    "update_sequence_from_frame",
    "write_json",
    "write_matrix_csv",
    "write_spec",
    "write_trace",
    "write_update_sequence",
]
