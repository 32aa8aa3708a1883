import { ApiClient } from "./api.js";
import { App } from "./app.js";

function param(name: string, fallback: string): string {
  return new URLSearchParams(window.location.search).get(name) ?? fallback;
}

const root = document.getElementById("app");
if (!root) {
  throw new Error("missing #app container");
}

const app = new App({
  api: new ApiClient(param("server", "")),
  root,
  projectId: param("project", "default"),
});

const upload = document.getElementById("run-upload");
if (upload instanceof HTMLInputElement) {
  upload.addEventListener("change", () => {
    const file = upload.files?.[0];
    if (!file) return;
    void file.text().then((text) => app.uploadRun(JSON.parse(text)));
  });
}

void app.start();
