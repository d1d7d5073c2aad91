# C-SPF Risk Toolkit Application
