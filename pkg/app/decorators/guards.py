from functools import wraps
import logging
from flask import abort

from app.services.database_service import get_run

logger = logging.getLogger(__name__)

def run_required(f):
    """
    Resolves the `run_id` URL parameter to a registry entry and passes it on as `entry`.
    Unknown ids end the request with 404.
    """
    @wraps(f)
    def decorated_function(run_id, *args, **kwargs):
        entry = get_run(run_id)
        if entry is None:
            logger.warning(f"Run {run_id} requested but not registered.")
            abort(404)
        return f(entry, *args, **kwargs)

    return decorated_function
