import { startDashboard } from "./app.js";

const params = new URLSearchParams(window.location.search);
startDashboard(params.get("service") ?? "http://127.0.0.1:8470");
