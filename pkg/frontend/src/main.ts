/**
 * Browser entry: wires the console app to a minimal DOM shell (index.html).
 * Build with `npm run build`, serve dist/ + index.html from any static
 * server, and point the form at a running `crisismesh serve` instance.
 */

import { GatewayClient } from "./client.js";
import { ConsoleApp } from "./console.js";
import { panelsToHtml } from "./render.js";

function element<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (node === null) {
    throw new Error(`missing element #${id}`);
  }
  return node as T;
}

export function mount(): void {
  const panelsNode = element<HTMLDivElement>("panels");
  const app = new ConsoleApp(
    new GatewayClient(element<HTMLInputElement>("gateway-url").value),
    (panels) => {
      panelsNode.innerHTML = panelsToHtml(panels);
    },
  );

  element<HTMLButtonElement>("login").addEventListener("click", async () => {
    const ok = await app.login(
      element<HTMLInputElement>("operator").value,
      element<HTMLInputElement>("secret").value,
    );
    if (ok) {
      await app.refreshState();
      void app.follow().then(() => app.refreshState());
    }
  });

  element<HTMLButtonElement>("send").addEventListener("click", async () => {
    app.draft({
      target: element<HTMLInputElement>("target").value,
      action: element<HTMLInputElement>("action").value,
    });
    try {
      await app.recommend();
    } finally {
      await app.refreshState();
    }
  });
}

if (typeof document !== "undefined") {
  mount();
}
