"""
Flask Web Application - FLP Emergence Simulator
JSON API over runs, logic queries and outcome bridging.
"""

from flask import Flask, request, jsonify
from flask_cors import CORS
from werkzeug.utils import secure_filename
import os
import logging
from datetime import datetime
from dotenv import load_dotenv

from src import __version__
from src.exceptions import (
    ConfigurationError,
    FlpeError,
    FormulaSyntaxError,
    PreconditionError,
    ResourceCapError,
    TopologyError,
    TraceFormatError,
)
from src.formulas import parse_sequent, render_set
from src.measurement import (
    count_faulty_total,
    encode_outcome,
    execution_profile,
    fault_counters,
)
from src.paralogic import LogicId, entails
from src.phases import bridge_verdict
from src.protocols import PROTOCOL_KEYS
from src.scheduler import check_admissible, run
from src.utils.scenario import Scenario, parse_scenario
from src.utils.trace_io import replay_trace, write_trace

# Load environment variables
load_dotenv()

# Configure logging
logging.basicConfig(
    level=os.getenv("LOG_LEVEL", "INFO"),
    format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
)
logger = logging.getLogger(__name__)

# Initialize Flask app
app = Flask(__name__)
app.config["MAX_CONTENT_LENGTH"] = int(os.getenv("MAX_CONTENT_LENGTH", 1048576))  # 1MB
app.config["TRACE_FOLDER"] = os.getenv("TRACE_FOLDER", os.path.join(os.getcwd(), "traces"))

# Enable CORS
CORS(app)

os.makedirs(app.config["TRACE_FOLDER"], exist_ok=True)

STATUS_BY_ERROR = (
    ((ConfigurationError, FormulaSyntaxError, TraceFormatError, TopologyError), 400),
    ((PreconditionError,), 409),
    ((ResourceCapError,), 413),
)


def _error(e: Exception):
    for classes, status in STATUS_BY_ERROR:
        if isinstance(e, classes):
            return jsonify({"success": False, "error": str(e)}), status
    logger.error(f"Unhandled simulator error: {str(e)}")
    return jsonify({"success": False, "error": str(e)}), 500


def _parse_logic(name: str) -> LogicId:
    try:
        return LogicId.parse(name)
    except ValueError as e:
        raise ConfigurationError(str(e))


@app.route("/api/health", methods=["GET"])
def health_check():
    """
    Health check endpoint.

    Returns:
        JSON response with application status
    """
    return (
        jsonify(
            {
                "status": "healthy",
                "version": __version__,
                "timestamp": datetime.now().isoformat(),
            }
        ),
        200,
    )


@app.route("/api/protocols", methods=["GET"])
def get_protocols():
    """List the protocol keys scenarios may use and the available logics."""
    return (
        jsonify(
            {
                "success": True,
                "protocols": list(PROTOCOL_KEYS),
                "logics": list(LogicId.SUPPORTED),
            }
        ),
        200,
    )


@app.route("/api/logic", methods=["POST"])
def logic_query():
    """
    Decide an entailment.

    Expected JSON:
        - logic: 'cpl', 'mbc' or 'c1'..'c5'
        - query: 'GAMMA |- GOAL'

    Returns:
        JSON response with the verdict line
    """
    payload = request.get_json(silent=True) or {}
    if "query" not in payload:
        return jsonify({"success": False, "error": "No query provided"}), 400
    try:
        logic = _parse_logic(payload.get("logic", "cpl"))
        gamma, goal = parse_sequent(payload["query"])
        result = entails(logic, gamma, goal)
        return (
            jsonify(
                {
                    "success": True,
                    "logic": logic.key,
                    "entails": result.entails,
                    "verdict": result.verdict(),
                    "closure_size": result.closure_size,
                }
            ),
            200,
        )
    except FlpeError as e:
        return _error(e)


def _scenario_from_request() -> Scenario:
    if "scenario" in request.files:
        file = request.files["scenario"]
        if file.filename == "":
            raise ConfigurationError("No file selected")
        if not Scenario.check_file_extension(file.filename):
            raise ConfigurationError(
                f"Invalid file type. Allowed: {', '.join(sorted(Scenario.ALLOWED_EXTENSIONS))}"
            )
        name = secure_filename(file.filename).rsplit(".", 1)[0] or "scenario"
        return parse_scenario(file.read().decode("utf-8"), default_name=name)
    payload = request.get_json(silent=True) or {}
    if "scenario" not in payload:
        raise ConfigurationError("No scenario provided")
    return parse_scenario(payload["scenario"])


@app.route("/api/run", methods=["POST"])
def run_scenario():
    """
    Run a scenario once and store its trace.

    Expected input (either):
        - multipart form with a 'scenario' file
        - JSON {"scenario": "<scenario text>"}

    Returns:
        JSON response with the profile summary and the trace name
    """
    try:
        scenario = _scenario_from_request()
        system = scenario.materialize()
        execution = run(
            system.topology,
            system.initial,
            system.protocol,
            scenario.to_adversary(system.topology),
            scenario.step_bound,
        )
        trace_name = secure_filename(f"{scenario.name}_seed{scenario.seed}.jsonl")
        write_trace(os.path.join(app.config["TRACE_FOLDER"], trace_name), scenario, execution)
        report = check_admissible(execution)
        logger.info(f"Ran scenario {scenario.name} in {len(execution.steps)} steps")
        return (
            jsonify(
                {
                    "success": True,
                    "scenario": scenario.name,
                    "profile": execution_profile(execution).code,
                    "fault_counters": list(fault_counters(execution)),
                    "g_inf": count_faulty_total(execution),
                    "admissible": report.admissible,
                    "hierarchy_admissible": report.hierarchy_admissible,
                    "steps": len(execution.steps),
                    "truncated": execution.truncated,
                    "trace": trace_name,
                }
            ),
            200,
        )
    except FlpeError as e:
        return _error(e)


@app.route("/api/bridge", methods=["POST"])
def bridge():
    """
    Judge a stored trace's outcome under CPL and a chosen logic.

    Expected JSON:
        - trace: trace name returned by /api/run
        - logic: logic to compare with CPL (default 'mbc')
    """
    payload = request.get_json(silent=True) or {}
    if not payload.get("trace"):
        return jsonify({"success": False, "error": "No trace provided"}), 400
    try:
        logic = _parse_logic(payload.get("logic", "mbc"))
        path = os.path.join(app.config["TRACE_FOLDER"], secure_filename(payload["trace"]))
        _, execution = replay_trace(path)
        return (
            jsonify(
                {
                    "success": True,
                    "verdict": bridge_verdict(execution, logic),
                    "theory": render_set(encode_outcome(execution)),
                }
            ),
            200,
        )
    except FlpeError as e:
        return _error(e)


@app.errorhandler(413)
def request_entity_too_large(error):
    """Handle upload too large error."""
    return (
        jsonify(
            {
                "success": False,
                "error": "Upload too large. Maximum size: "
                f"{app.config['MAX_CONTENT_LENGTH'] / 1024:.0f}KB",
            }
        ),
        413,
    )


@app.errorhandler(404)
def not_found(error):
    """Handle 404 errors."""
    return jsonify({"success": False, "error": "Endpoint not found"}), 404


@app.errorhandler(500)
def internal_error(error):
    """Handle 500 errors."""
    logger.error(f"Internal server error: {str(error)}")
    return jsonify({"success": False, "error": "Internal server error"}), 500


if __name__ == "__main__":
    host = os.getenv("HOST", "0.0.0.0")
    port = int(os.getenv("PORT", 5000))
    debug = os.getenv("DEBUG", "False").lower() == "true"

    logger.info(f"Starting server on {host}:{port}")
    logger.info(f"Debug mode: {debug}")

    app.run(host=host, port=port, debug=debug)
