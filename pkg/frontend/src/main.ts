import { AbxApp } from "./app.js";

const root = document.getElementById("app");
if (root === null) throw new Error("missing #app mount point");

const app = new AbxApp({ root, storage: window.localStorage });
void app.start();
