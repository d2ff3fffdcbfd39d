import { mountConsole } from "./ui.js";

const base = (window as unknown as { AUTOMOOSE_BASE?: string }).AUTOMOOSE_BASE
  ?? window.location.origin;
mountConsole(base);
