import { createApiClient } from "./api.js";
import { bindElements, initApp } from "./app.js";

initApp(bindElements(document), createApiClient());
