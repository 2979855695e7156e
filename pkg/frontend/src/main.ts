import { AdminConsole } from "./console.js";

const root = document.getElementById("app");
if (root === null) {
  throw new Error("missing #app element");
}
new AdminConsole(root).start();
