"""Live play service: sessions, wire protocol, HTTP/WebSocket app."""
