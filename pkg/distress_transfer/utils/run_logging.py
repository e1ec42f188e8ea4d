"""
Run Logging and Observability Utilities

Provides run ID generation, stage logging, and error payloads for pipeline stages.
"""

import logging
import time
import traceback
import uuid
from contextlib import contextmanager
from contextvars import ContextVar
from typing import Optional

from ..errors import ConfigError, DistressError, UNEXPECTED_EXIT_CODE

# Set up logging
logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"

_run_id: ContextVar[Optional[str]] = ContextVar("run_id", default=None)


def configure_logging(level: str = "INFO"):
    """Configure root logging once for CLI use"""
    logging.basicConfig(level=getattr(logging, level.upper(), logging.INFO), format=LOG_FORMAT)


def generate_run_id():
    """Generate a unique run ID"""
    return str(uuid.uuid4())


def set_run_id(run_id: Optional[str] = None) -> str:
    """Bind a run ID to the current context, generating one if needed"""
    run_id = run_id or generate_run_id()
    _run_id.set(run_id)
    return run_id


def get_run_id():
    """Get the bound run ID or bind a new one"""
    run_id = _run_id.get()
    if run_id is None:
        run_id = set_run_id()
    return run_id


def log_stage(stage, status="ok", elapsed=None, error=None, **details):
    """
    Log a pipeline stage with observability data

    Args:
        stage: Stage name (e.g., 'ingest')
        status: 'ok' or 'failed'
        elapsed: Wall-clock seconds spent in the stage
        error: Error object or message if the stage failed
        details: Extra key/values (counts, sizes) to include

    Returns:
        The run ID the record was logged under
    """
    run_id = get_run_id()

    log_data = {
        'run_id': run_id,
        'stage': stage,
        'status': status,
        'elapsed_seconds': None if elapsed is None else round(elapsed, 6),
        **details,
    }

    if error:
        log_data['error'] = str(error)
        log_data['error_type'] = type(error).__name__
        if isinstance(error, Exception):
            log_data['error_traceback'] = traceback.format_exc()

    if error:
        logger.error(f"Stage Failed: {log_data}")
    else:
        logger.info(f"Stage Complete: {log_data}")

    return run_id


@contextmanager
def stage(name, timings: Optional[dict] = None):
    """
    Time a stage, log its outcome and tag errors raised inside it.

    Usage:
        with stage("ingest", timings):
            ...

    A DistressError raised inside keeps its type and is re-tagged with the
    stage, except a ConfigError, which stays a config failure. Any other
    exception is wrapped in a DistressError for that stage.
    """
    started = time.perf_counter()
    try:
        yield
    except DistressError as e:
        if not isinstance(e, ConfigError):
            e.stage = name
        log_stage(name, 'failed', time.perf_counter() - started, error=e)
        raise
    except Exception as e:
        log_stage(name, 'failed', time.perf_counter() - started, error=e)
        raise DistressError(f"{type(e).__name__}: {e}", stage=name) from e
    elapsed = time.perf_counter() - started
    if timings is not None:
        timings[name] = timings.get(name, 0.0) + elapsed
    log_stage(name, 'ok', elapsed)


def create_error_payload(error, run_id=None):
    """
    Create a normalized error payload

    Args:
        error: Error message or exception
        run_id: Run ID for tracking

    Returns:
        dict with error, error_code, stage, exit_code and run_id
    """
    if run_id is None:
        run_id = get_run_id()

    error_message = str(error) if error else 'An error occurred'
    stage_name = getattr(error, 'stage', None)
    exit_code = error.exit_code if isinstance(error, DistressError) else UNEXPECTED_EXIT_CODE

    if stage_name:
        error_code = f"{stage_name.upper()}_ERROR"
    else:
        error_code = 'UNKNOWN_ERROR'

    return {
        'error': error_message,
        'error_code': error_code,
        'stage': stage_name,
        'exit_code': exit_code,
        'run_id': run_id,
    }
