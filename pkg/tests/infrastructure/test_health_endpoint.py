from fastapi.testclient import TestClient
from fastapi import status

from main import app

def test_health_endpoint_returns_ok():
    """
    The /health endpoint should return HTTP 200 with the service name and
    an ISO timestamp.
    """
    client = TestClient(app)
    response = client.get("/health")
    assert response.status_code == status.HTTP_200_OK
    data = response.json()
    assert data["status"] == "healthy"
    assert data["service"] == "Interrupt Analyzer API"
    assert isinstance(data["timestamp"], str) and "T" in data["timestamp"]


def test_openapi_documents_the_analysis_endpoint():
    client = TestClient(app)
    schema = client.get("/openapi.json").json()
    assert "/analyses" in schema["paths"]
    assert "ReportResponse" in schema["components"]["schemas"]
