/** Entry point: open the dashboard named in the URL hash, creating a
 * fresh one when the hash is empty. The API origin defaults to the
 * page's own origin and can be overridden with ?api=<base>. */

import { StatlinkApi } from "./api.js";
import { DashboardShell } from "./dashboard.js";

async function boot(): Promise<void> {
  const params = new URLSearchParams(window.location.search);
  const base = params.get("api") ?? "";
  const api = new StatlinkApi(base);
  const mount = document.getElementById("app");
  if (!mount) throw new Error("missing #app mount point");

  let dashboardId = window.location.hash.replace(/^#/, "");
  if (!dashboardId) {
    const created = await api.createDashboard("New dashboard");
    dashboardId = created.dashboard_id;
    window.location.hash = dashboardId;
  }
  const shell = new DashboardShell(api, mount);
  await shell.open(dashboardId);
}

boot().catch((err) => {
  const mount = document.getElementById("app");
  if (mount) {
    mount.textContent = `failed to open dashboard: ${
      err instanceof Error ? err.message : String(err)
    }`;
    mount.className = "boot-error";
  }
});
