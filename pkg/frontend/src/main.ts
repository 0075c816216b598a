import { App } from "./app";
import "./style.css";

const root = document.getElementById("app");
if (!root) throw new Error("missing #app mount point");
root.tabIndex = 0;
const app = new App(root);
app.start();
root.focus();
