import { ApiClient } from "./api.js";
import { AnnotatorApp } from "./app.js";

const api = new ApiClient("");
const app = new AnnotatorApp(api, document);
app.mount("app");

async function boot(): Promise<void> {
  const recordings = await api.listRecordings();
  const picker = document.getElementById("picker");
  if (!picker) return;
  for (const info of recordings) {
    const button = document.createElement("button");
    button.textContent =
      `${info.id} (${(info.duration_us / 1e6).toFixed(1)} s, ${info.annotation})`;
    button.disabled = info.annotation === "error";
    button.addEventListener("click", () => {
      void app.loadRecording(info.id);
    });
    picker.appendChild(button);
  }
}

void boot();
