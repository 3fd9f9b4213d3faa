import { ApiClient } from "./api";
import { ChatSession } from "./session";
import { buildApp } from "./ui";

declare global {
  interface Window {
    RAGKIT_API_BASE?: string;
  }
}

const api = new ApiClient(window.RAGKIT_API_BASE ?? "");
const session = new ChatSession(api);
const root = document.getElementById("app");
if (!root) throw new Error("missing #app mount point");
buildApp(root, session);

api
  .health()
  .then((health) => {
    const chip = document.createElement("span");
    chip.className = "chip chip-health";
    chip.textContent = `index: ${health.index_chunks} chunks`;
    document.querySelector(".topbar")?.append(chip);
  })
  .catch(() => {
    /* service offline; the error banner will surface on first ask */
  });
