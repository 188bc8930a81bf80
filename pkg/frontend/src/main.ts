import { createHttpClient } from "./client.js";
import { LambdaConsole } from "./controller.js";
import { mountConsole } from "./ui.js";

const params = new URLSearchParams(window.location.search);
const serviceUrl =
  params.get("service") ??
  (window as { CONDMRI_SERVICE_URL?: string }).CONDMRI_SERVICE_URL ??
  "http://localhost:8000";

const controller = new LambdaConsole(createHttpClient(serviceUrl));
const root = document.getElementById("console-root");
if (!root) throw new Error("missing #console-root element");
mountConsole(root, controller);
void controller.loadCatalog();
